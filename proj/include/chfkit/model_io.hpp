#pragma once

// CHFKIT-MLP model files: a line-oriented text header followed by the
// "data" line and raw little-endian float64 blocks, one weight block
// (out_dim x in_dim, row-major) and one bias block per layer.
//
//   CHFKIT-MLP
//   version 1
//   features D_m L_m P_Pa G_kg_m2s dh_sub_J_kg
//   mode residual
//   base_model bowring
//   scaler_convention population
//   input_mean <5 numbers>
//   input_std <5 numbers>
//   output_mean <1 number>
//   output_std <1 number>
//   layers 8
//   layer 0 in 5 out 44 bias 44 activation tanh
//   ...
//   data
//   <binary payload>
//
// Header numbers use the shortest decimal form that round-trips exactly.

#include "chfkit/mlp.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace chfkit {

inline constexpr std::string_view kModelFormatId = "CHFKIT-MLP";
inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const Mlp& m);
/// Throws ParseError (with byte offset and field) for malformed input and
/// ValidationError when the decoded network violates an invariant.
Mlp deserialize_model(std::string_view bytes);

void save_model(const Mlp& m, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

} // namespace chfkit
