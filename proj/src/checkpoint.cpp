#include "evfgn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace evfgn::checkpoint {

namespace {

std::string shape_text(const Dims& d) {
  if (d.steps == 1 && d.channels == 1) return std::to_string(d.vars);
  return std::to_string(d.vars) + "x" + std::to_string(d.steps);
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string manifest(const model::Model& m) {
  const model::ModelConfig& c = m.config;
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << " vars=" << c.vars << " steps=" << c.steps << " horizon=" << c.horizon
     << " embed_dim=" << c.embed_dim << " order=" << c.order << " reduced_steps=" << c.reduced_steps
     << " ffn_hidden1=" << c.ffn_hidden1 << " ffn_hidden2=" << c.ffn_hidden2
     << " negative_slope=" << hex_double(c.negative_slope) << " variant=" << model::to_string(m.variant)
     << " params=";
  bool first = true;
  for (const model::ParamInfo& p : model::parameter_layout(m.params)) {
    if (!first) os << ';';
    first = false;
    os << p.name << ':' << shape_text(p.dims) << ':' << (p.is_complex ? "complex" : "real");
  }
  return os.str();
}

std::size_t parse_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::IncompatibleCheckpoint, "manifest lacks '" + key + "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  require(end && *end == '\0' && !it->second.empty(), ErrorKind::IncompatibleCheckpoint,
          "bad integer for '" + key + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string encode(const model::Model& m) {
  model::check_params(m.config, m.params);
  std::string out = manifest(m);
  out.push_back('\n');
  for (double v : model::flatten(m.params)) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFU));
  }
  return out;
}

model::Model decode(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  require(eol != std::string_view::npos, ErrorKind::IncompatibleCheckpoint, "missing manifest line");
  const std::string header(bytes.substr(0, eol));
  std::istringstream is(header);
  std::string magic;
  std::string version;
  is >> magic >> version;
  require(magic == kMagic && version == kVersion, ErrorKind::IncompatibleCheckpoint,
          "not an evfgn v1 checkpoint");
  std::map<std::string, std::string> kv;
  for (std::string tok; is >> tok;) {
    const std::size_t eq = tok.find('=');
    require(eq != std::string::npos, ErrorKind::IncompatibleCheckpoint, "malformed manifest token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  model::Model m;
  model::ModelConfig& c = m.config;
  c.vars = parse_size(kv, "vars");
  c.steps = parse_size(kv, "steps");
  c.horizon = parse_size(kv, "horizon");
  c.embed_dim = parse_size(kv, "embed_dim");
  c.order = parse_size(kv, "order");
  c.reduced_steps = parse_size(kv, "reduced_steps");
  c.ffn_hidden1 = parse_size(kv, "ffn_hidden1");
  c.ffn_hidden2 = parse_size(kv, "ffn_hidden2");
  require(kv.count("negative_slope") && kv.count("variant"), ErrorKind::IncompatibleCheckpoint,
          "manifest lacks negative_slope or variant");
  c.negative_slope = std::strtod(kv["negative_slope"].c_str(), nullptr);
  m.variant = model::parse_variant(kv["variant"]);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::IncompatibleCheckpoint, e.what());
  }

  // Shape the parameter containers from the config, then require that the
  // stored manifest names exactly that layout.
  m.params = model::init_params(c, 0);
  require(manifest(m).substr(manifest(m).find(" params=")) == header.substr(header.find(" params=")),
          ErrorKind::IncompatibleCheckpoint, "parameter manifest does not match the stored config");
  const std::size_t count = model::flatten(m.params).size();
  const std::string_view payload = bytes.substr(eol + 1);
  require(payload.size() == count * 8, ErrorKind::IncompatibleCheckpoint,
          "payload has " + std::to_string(payload.size()) + " bytes, expected " + std::to_string(count * 8));
  std::vector<double> flat(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(payload[i * 8 + b])) << (8 * b);
    flat[i] = std::bit_cast<double>(bits);
  }
  model::unflatten(flat, m.params);
  return m;
}

void save(const std::filesystem::path& path, const model::Model& m) {
  const std::string bytes = encode(m);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(os), ErrorKind::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

model::Model load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return decode(buf.str());
}

model::Model load_compatible(const std::filesystem::path& path, const model::ModelConfig& expected) {
  model::Model m = load(path);
  require(m.config == expected, ErrorKind::IncompatibleCheckpoint,
          "checkpoint " + path.string() + " was trained with a different architecture");
  return m;
}

}  // namespace evfgn::checkpoint
