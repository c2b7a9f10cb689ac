#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tlsr/nn/adam.hpp"
#include "tlsr/nn/tensor.hpp"

namespace tlsr::nn {

struct NamedArray {
  std::string name;
  std::vector<std::int32_t> dims;
  std::vector<double> data;
};

/// Versioned binary container: named parameter arrays, optimizer state,
/// training step and string metadata. Doubles are stored verbatim, so a
/// save/load cycle is bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t step = 0;
  std::map<std::string, std::string> meta;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  void put(const std::string& name, const Tensor& t);
  std::string meta_or(const std::string& key, const std::string& fallback) const;
};

/// Writes to "<path>.tmp" and renames over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void export_parameters(std::span<Parameter* const> params, Checkpoint& ckpt);
/// Every parameter must be present with a matching shape (DataError otherwise).
void import_parameters(std::span<Parameter* const> params, const Checkpoint& ckpt);

void export_adam(std::span<Parameter* const> params, const AdamState& state, Checkpoint& ckpt);
void import_adam(std::span<Parameter* const> params, const Checkpoint& ckpt, AdamState& state);

}  // namespace tlsr::nn
