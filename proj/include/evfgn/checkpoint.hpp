#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "evfgn/model.hpp"

// Binary checkpoint: one UTF-8 manifest line
//
//   evfgn-checkpoint v1 vars=.. steps=.. horizon=.. embed_dim=.. order=.. reduced_steps=..
//   ffn_hidden1=.. ffn_hidden2=.. negative_slope=<hex float> variant=<name>
//   params=<name>:<shape>:<real|complex>;...
//
// (space separated, on a single line, terminated by '\n') followed by the
// parameters in manifest order as little-endian IEEE-754 doubles; complex
// values are written as (real, imag) pairs.
namespace evfgn::checkpoint {

inline constexpr std::string_view kMagic = "evfgn-checkpoint";
inline constexpr std::string_view kVersion = "v1";

std::string encode(const model::Model& model);
model::Model decode(std::string_view bytes);

/// Writes to `path.tmp` and renames over `path`.
void save(const std::filesystem::path& path, const model::Model& model);
model::Model load(const std::filesystem::path& path);

/// Loads and verifies that the stored architecture equals `expected`.
model::Model load_compatible(const std::filesystem::path& path, const model::ModelConfig& expected);

}  // namespace evfgn::checkpoint
