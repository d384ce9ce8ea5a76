// SPDX-License-Identifier: Apache-2.0
//
// Model checkpoints. All integers u32 little-endian, reals f64 little-endian,
// matrices as (u32 rows, u32 cols, row-major f64 values).
//
// GATV1:
//   "GATV1"
//   u32 dim_count (K + 1), u32 dims[dim_count]
//   f64 dropout_rate
//   u32 param_count (8 K + 2), then each matrix in GatModel::parameters()
//   order: per layer phi.weight, phi.bias, psi.weight, psi.bias,
//   theta_same.weight, theta_same.bias, theta_cross.weight,
//   theta_cross.bias; then output.weight, output.bias.
//
// BVEC1:
//   "BVEC1"
//   u32 op_mask (mul=1, add=2, sub=4, concat=8)
//   u32 input_dim
//   u32 hidden_count, u32 hidden[hidden_count]
//   u8 pooling (0 pairwise, 1 mean)
//   f64 dropout_rate
//   u32 param_count (2 (hidden_count + 1)), then per layer weight, bias.
//
// Files must end exactly after the last matrix.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gatsv/baselines.hpp"
#include "gatsv/gat.hpp"

namespace gatsv {

std::string encode_gat(const GatModel& model);
GatModel decode_gat(std::string_view bytes);
void save_gat(const GatModel& model, const std::filesystem::path& path);
GatModel load_gat(const std::filesystem::path& path);

std::string encode_bvector(const BVectorModel& model);
BVectorModel decode_bvector(std::string_view bytes);
void save_bvector(const BVectorModel& model, const std::filesystem::path& path);
BVectorModel load_bvector(const std::filesystem::path& path);

// "GATV1", "BVEC1", or empty when the bytes carry neither magic.
std::string checkpoint_kind(std::string_view bytes);

}  // namespace gatsv
