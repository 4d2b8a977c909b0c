#include "msrnn/checkpoint.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace msrnn {

namespace {

constexpr std::string_view kMagic = "msrnn-checkpoint 1";

void put_hex(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  out << buf;
}

void put_values(std::ostream& out, std::string_view tag, std::span<const double> values) {
  out << tag;
  for (double v : values) {
    out << ' ';
    put_hex(out, v);
  }
  out << '\n';
}

bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  return true;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next line split on single spaces; false at end of input.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    fields.clear();
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(std::move(f));
    return true;
  }

  void expect(std::vector<std::string>& fields, std::string_view what) {
    if (!next(fields)) fail("unexpected end of file, expected " + std::string(what));
  }

  [[noreturn]] void fail(const std::string& msg) const { throw InputError("checkpoint: " + msg, line_no_); }

  double number(const std::string& s) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) fail("invalid number '" + s + "'");
    return v;
  }

  std::size_t count(const std::string& s) const {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      fail("invalid count '" + s + "'");
    }
    if (pos != s.size()) fail("invalid count '" + s + "'");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> values(const std::vector<std::string>& fields, std::string_view tag, std::size_t n) const {
    if (fields.empty() || fields[0] != tag) fail("expected '" + std::string(tag) + "' line");
    if (fields.size() != n + 1) {
      fail("'" + std::string(tag) + "' has " + std::to_string(fields.size() - 1) + " values, expected " +
           std::to_string(n));
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i < fields.size(); ++i) out.push_back(number(fields[i]));
    return out;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void Checkpoint::set(std::string key, std::string value) {
  for (auto& [k, v] : settings)
    if (k == key) {
      v = std::move(value);
      return;
    }
  settings.emplace_back(std::move(key), std::move(value));
}

const std::string& Checkpoint::setting(std::string_view key) const {
  for (const auto& [k, v] : settings)
    if (k == key) return v;
  throw InputError("checkpoint: missing setting '" + std::string(key) + "'");
}

const Matrix& Checkpoint::tensor(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw InputError("checkpoint: missing tensor '" + std::string(name) + "'");
}

void Checkpoint::write(std::ostream& out) const {
  if (!valid_token(method)) throw std::invalid_argument("checkpoint: invalid method name");
  out << kMagic << '\n' << "method " << method << '\n';
  for (const auto& [k, v] : settings) {
    if (!valid_token(k) || !valid_token(v)) throw std::invalid_argument("checkpoint: invalid setting '" + k + "'");
    out << "setting " << k << ' ' << v << '\n';
  }
  if (scaler) {
    out << "scaler " << to_string(scaler->mode) << ' ' << scaler->offset.size() << '\n';
    put_values(out, "offset", scaler->offset);
    put_values(out, "spread", scaler->spread);
    out << "degenerate";
    for (bool d : scaler->degenerate) out << ' ' << (d ? 1 : 0);
    out << '\n';
  }
  for (const auto& t : tensors) {
    if (!valid_token(t.name)) throw std::invalid_argument("checkpoint: invalid tensor name");
    out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
    put_values(out, "values", t.value.values());
  }
  out << "end\n";
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write(out);
  out.flush();
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

Checkpoint Checkpoint::read(std::istream& in) {
  Reader r(in);
  std::vector<std::string> f;
  if (!r.next(f) || f.size() != 2 || f[0] + ' ' + f[1] != kMagic) throw InputError("checkpoint: missing header", 1);
  Checkpoint cp;
  r.expect(f, "method");
  if (f.size() != 2 || f[0] != "method") r.fail("expected 'method <name>'");
  cp.method = f[1];
  for (;;) {
    r.expect(f, "'end'");
    if (f.empty()) r.fail("blank line");
    if (f[0] == "end") break;
    if (f[0] == "setting") {
      if (f.size() != 3) r.fail("expected 'setting <key> <value>'");
      cp.settings.emplace_back(f[1], f[2]);
    } else if (f[0] == "scaler") {
      if (f.size() != 3) r.fail("expected 'scaler <mode> <features>'");
      Scaler s;
      try {
        s.mode = parse_scaler_mode(f[1]);
      } catch (const std::invalid_argument& e) {
        r.fail(e.what());
      }
      const std::size_t n = r.count(f[2]);
      r.expect(f, "offset");
      s.offset = r.values(f, "offset", n);
      r.expect(f, "spread");
      s.spread = r.values(f, "spread", n);
      r.expect(f, "degenerate");
      for (double d : r.values(f, "degenerate", n)) s.degenerate.push_back(d != 0.0);
      cp.scaler = std::move(s);
    } else if (f[0] == "tensor") {
      if (f.size() != 4) r.fail("expected 'tensor <name> <rows> <cols>'");
      Tensor t{f[1], Matrix(r.count(f[2]), r.count(f[3]))};
      r.expect(f, "values");
      const auto vals = r.values(f, "values", t.value.size());
      std::copy(vals.begin(), vals.end(), t.value.values().begin());
      cp.tensors.push_back(std::move(t));
    } else {
      r.fail("unknown record '" + f[0] + "'");
    }
  }
  return cp;
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read(in);
}

}  // namespace msrnn
