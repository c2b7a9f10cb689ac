#include "tlsr/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "tlsr/errors.hpp"

namespace tlsr::nn {

namespace {

constexpr char kMagic[8] = {'T', 'L', 'S', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put_raw(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get_raw(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint: truncated file");
  return v;
}

std::string get_string(std::istream& is) {
  const auto n = get_raw<std::uint32_t>(is);
  if (n > (1u << 24)) throw DataError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw DataError("checkpoint: truncated string");
  return s;
}

std::vector<std::int32_t> dims_of(const Shape& s) { return {s.n, s.c, s.h, s.w}; }

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void Checkpoint::put(const std::string& name, const Tensor& t) {
  NamedArray a{name, dims_of(t.shape), {t.data.begin(), t.data.end()}};
  for (auto& existing : arrays)
    if (existing.name == name) {
      existing = std::move(a);
      return;
    }
  arrays.push_back(std::move(a));
}

std::string Checkpoint::meta_or(const std::string& key, const std::string& fallback) const {
  auto it = meta.find(key);
  return it == meta.end() ? fallback : it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot write " + tmp.string());
    os.write(kMagic, sizeof(kMagic));
    put_raw(os, Checkpoint::kVersion);
    put_raw(os, ckpt.step);
    put_raw(os, static_cast<std::uint32_t>(ckpt.meta.size()));
    for (const auto& [k, v] : ckpt.meta) {
      put_string(os, k);
      put_string(os, v);
    }
    put_raw(os, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& a : ckpt.arrays) {
      put_string(os, a.name);
      put_raw(os, static_cast<std::uint32_t>(a.dims.size()));
      for (auto d : a.dims) put_raw(os, d);
      put_raw(os, static_cast<std::uint64_t>(a.data.size()));
      os.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    }
    if (!os) throw DataError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw DataError("checkpoint: bad magic in " + path.string());
  const auto version = get_raw<std::uint32_t>(is);
  if (version != Checkpoint::kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.step = get_raw<std::uint64_t>(is);
  const auto n_meta = get_raw<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(is);
    ckpt.meta[k] = get_string(is);
  }
  const auto n_arrays = get_raw<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    NamedArray a;
    a.name = get_string(is);
    const auto nd = get_raw<std::uint32_t>(is);
    if (nd > 8) throw DataError("checkpoint: too many dims in " + a.name);
    std::uint64_t expect = 1;
    for (std::uint32_t d = 0; d < nd; ++d) {
      a.dims.push_back(get_raw<std::int32_t>(is));
      expect *= static_cast<std::uint64_t>(a.dims.back());
    }
    const auto count = get_raw<std::uint64_t>(is);
    if (count != expect) throw DataError("checkpoint: element count mismatch in " + a.name);
    a.data.resize(count);
    if (count && !is.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(count * sizeof(double))))
      throw DataError("checkpoint: truncated array " + a.name);
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void export_parameters(std::span<Parameter* const> params, Checkpoint& ckpt) {
  for (const Parameter* p : params) ckpt.put(p->name, p->value);
}

namespace {
void load_into(const Checkpoint& ckpt, const std::string& name, Tensor& dst) {
  const NamedArray* a = ckpt.find(name);
  if (!a) throw DataError("checkpoint: missing array " + name);
  if (a->dims != dims_of(dst.shape)) throw DataError("checkpoint: shape mismatch for " + name);
  dst.data.assign(a->data.begin(), a->data.end());
}
}  // namespace

void import_parameters(std::span<Parameter* const> params, const Checkpoint& ckpt) {
  for (Parameter* p : params) load_into(ckpt, p->name, p->value);
}

void export_adam(std::span<Parameter* const> params, const AdamState& state, Checkpoint& ckpt) {
  if (state.m.size() != params.size()) throw std::invalid_argument("export_adam: state/params mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckpt.put("adam.m." + params[k]->name, state.m[k]);
    ckpt.put("adam.v." + params[k]->name, state.v[k]);
  }
  std::ostringstream hp;
  hp.precision(17);
  hp << state.settings.lr << ' ' << state.settings.beta1 << ' ' << state.settings.beta2 << ' ' << state.settings.eps;
  ckpt.meta["adam.step"] = std::to_string(state.step);
  ckpt.meta["adam.settings"] = hp.str();
}

void import_adam(std::span<Parameter* const> params, const Checkpoint& ckpt, AdamState& state) {
  state = make_adam_state(params, state.settings);
  for (std::size_t k = 0; k < params.size(); ++k) {
    load_into(ckpt, "adam.m." + params[k]->name, state.m[k]);
    load_into(ckpt, "adam.v." + params[k]->name, state.v[k]);
  }
  state.step = std::stoll(ckpt.meta_or("adam.step", "0"));
  std::istringstream hp(ckpt.meta_or("adam.settings", ""));
  AdamSettings s = state.settings;
  if (hp >> s.lr >> s.beta1 >> s.beta2 >> s.eps) state.settings = s;
}

}  // namespace tlsr::nn
