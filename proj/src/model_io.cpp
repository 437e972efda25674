#include "chfkit/model_io.hpp"

#include "chfkit/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace chfkit {

namespace {

void put_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void put_list(std::string& out, std::string_view key, const std::vector<double>& v) {
  out += key;
  for (double x : v) {
    out += ' ';
    put_number(out, x);
  }
  out += '\n';
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out += static_cast<char>((bits >> (8 * k)) & 0xffU);
}

// Sequential reader over the file that remembers where each token started.
class Reader {
public:
  explicit Reader(std::string_view s) : s_(s) {}

  std::size_t pos() const { return pos_; }

  // Next header line without its terminator.
  std::string_view line(const std::string& field) {
    line_start_ = pos_;
    auto nl = s_.find('\n', pos_);
    if (nl == std::string_view::npos) throw ParseError("unexpected end of header", pos_, field);
    auto l = s_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return l;
  }

  std::size_t line_start() const { return line_start_; }

  double f64(const std::string& field) {
    if (s_.size() - pos_ < 8) throw ParseError("truncated weight data", pos_, field);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + k])) << (8 * k);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  bool at_end() const { return pos_ == s_.size(); }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view l) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < l.size()) {
    while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < l.size() && l[j] != ' ' && l[j] != '\t') ++j;
    if (j > i) out.push_back(l.substr(i, j - i));
    i = j;
  }
  return out;
}

// Splits "key v1 v2 ..." after checking the key.
std::vector<std::string_view> keyed(Reader& r, const std::string& key) {
  auto start = r.pos();
  auto toks = split_ws(r.line(key));
  if (toks.empty() || toks.front() != key) {
    throw ParseError("expected '" + key + "'", start, key);
  }
  toks.erase(toks.begin());
  return toks;
}

double parse_double(std::string_view tok, std::size_t offset, const std::string& field) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("invalid number '" + std::string(tok) + "'", offset, field);
  }
  return v;
}

std::size_t parse_size(std::string_view tok, std::size_t offset, const std::string& field) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("invalid count '" + std::string(tok) + "'", offset, field);
  }
  return v;
}

std::vector<double> number_list(Reader& r, const std::string& key) {
  auto toks = keyed(r, key);
  std::vector<double> out;
  for (auto t : toks) out.push_back(parse_double(t, r.line_start(), key));
  return out;
}

std::string_view single(Reader& r, const std::string& key) {
  auto toks = keyed(r, key);
  if (toks.size() != 1) throw ParseError("expected one value", r.line_start(), key);
  return toks.front();
}

template <class F>
auto convert(F&& f, std::string_view tok, std::size_t offset, const std::string& field) {
  try {
    return f(tok);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), offset, field);
  }
}

} // namespace

std::string serialize_model(const Mlp& m) {
  m.validate();
  for (const auto& f : m.input_features) {
    if (f.empty() || f.find_first_of(" \t\r\n") != std::string::npos) {
      throw ValidationError("feature name '" + f + "' is empty or contains whitespace");
    }
  }
  std::string out;
  out += kModelFormatId;
  out += "\nversion " + std::to_string(kModelFormatVersion) + "\nfeatures";
  for (const auto& f : m.input_features) out += ' ' + f;
  out += "\nmode ";
  out += to_string(m.mode);
  out += "\nbase_model ";
  out += to_string(m.base_model);
  out += "\nscaler_convention population\n";
  put_list(out, "input_mean", m.input_scaler.mean);
  put_list(out, "input_std", m.input_scaler.std);
  put_list(out, "output_mean", m.output_scaler.mean);
  put_list(out, "output_std", m.output_scaler.std);
  out += "layers " + std::to_string(m.layers.size()) + '\n';
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    out += "layer " + std::to_string(k) + " in " + std::to_string(l.in_dim) + " out " +
           std::to_string(l.out_dim) + " bias " + std::to_string(l.bias.size()) + " activation " + std::string(to_string(l.activation)) + '\n';
  }
  out += "data\n";
  for (const auto& l : m.layers) {
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      for (std::size_t i = 0; i < l.in_dim; ++i) put_f64(out, l.weight(o, i));
    }
    for (double b : l.bias) put_f64(out, b);
  }
  return out;
}

Mlp deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.line("format") != kModelFormatId) throw ParseError("not a CHFKIT-MLP file", 0, "format");

  auto v = single(r, "version");
  const auto version = parse_size(v, r.line_start(), "version");
  if (version != static_cast<std::size_t>(kModelFormatVersion)) {
    throw ParseError("unsupported format version " + std::string(v), r.line_start(), "version");
  }

  Mlp m;
  for (auto t : keyed(r, "features")) m.input_features.emplace_back(t);
  m.mode = convert(mode_from_string, single(r, "mode"), r.line_start(), "mode");
  m.base_model = convert(base_model_from_string, single(r, "base_model"), r.line_start(), "base_model");
  if (single(r, "scaler_convention") != "population") {
    throw ParseError("unknown scaler convention", r.line_start(), "scaler_convention");
  }
  m.input_scaler.mean = number_list(r, "input_mean");
  m.input_scaler.std = number_list(r, "input_std");
  m.output_scaler.mean = number_list(r, "output_mean");
  m.output_scaler.std = number_list(r, "output_std");

  const auto n_layers = parse_size(single(r, "layers"), r.line_start(), "layers");
  if (n_layers == 0 || n_layers > 4096) throw ParseError("bad layer count", r.line_start(), "layers");
  for (std::size_t k = 0; k < n_layers; ++k) {
    const std::string field = "layer " + std::to_string(k);
    auto toks = split_ws(r.line(field));
    const auto at = r.line_start();
    if (toks.size() != 10 || toks[0] != "layer" || toks[2] != "in" || toks[4] != "out" ||
        toks[6] != "bias" || toks[8] != "activation") {
      throw ParseError("malformed layer line", at, field);
    }
    if (parse_size(toks[1], at, field) != k) throw ParseError("layer index out of order", at, field);
    const auto in = parse_size(toks[3], at, field + ".in");
    const auto out = parse_size(toks[5], at, field + ".out");
    const auto n_bias = parse_size(toks[7], at, field + ".bias");
    if (in == 0 || out == 0 || in > 100000 || out > 100000 || n_bias > 100000) {
      throw ParseError("layer dimensions out of range", at, field);
    }
    const auto act = convert(activation_from_string, toks[9], at, field + ".activation");
    m.layers.emplace_back(in, out, act);
    m.layers.back().bias.assign(n_bias, 0.0);
  }
  if (r.line("data") != "data") throw ParseError("expected 'data'", r.line_start(), "data");
  m.validate();

  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    auto& l = m.layers[k];
    const std::string field = "layer " + std::to_string(k);
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      for (std::size_t i = 0; i < l.in_dim; ++i) l.weight(o, i) = r.f64(field + ".weights");
    }
    for (auto& b : l.bias) b = r.f64(field + ".bias");
  }
  if (!r.at_end()) throw ParseError("trailing bytes after weight data", r.pos(), "data");
  m.validate();
  return m;
}

void save_model(const Mlp& m, const std::filesystem::path& path) {
  const auto bytes = serialize_model(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Mlp load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_model(ss.str());
}

} // namespace chfkit
