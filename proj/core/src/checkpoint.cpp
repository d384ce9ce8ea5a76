// SPDX-License-Identifier: Apache-2.0
#include "gatsv/checkpoint.hpp"

#include "gatsv/binary_io.hpp"
#include "gatsv/errors.hpp"

namespace gatsv {

namespace {

constexpr std::string_view kGatMagic = "GATV1";
constexpr std::string_view kBVecMagic = "BVEC1";
// Guards allocations driven by corrupted headers.
constexpr std::uint32_t kMaxDims = 1u << 16;

void write_params(ByteWriter& w, const std::vector<const Param*>& params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) w.matrix(p->value);
}

void read_params(ByteReader& r, const std::vector<Param*>& params) {
  const std::uint64_t at = r.offset();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw FormatError("expected " + std::to_string(params.size()) + " parameter tensors, header says " +
                          std::to_string(count),
                      at);
  }
  for (Param* p : params) {
    const std::uint64_t start = r.offset();
    Mat m = r.matrix();
    if (!m.same_shape(p->value)) {
      throw FormatError("parameter '" + p->name + "' has shape " + shape_string(m) + ", expected " +
                            shape_string(p->value),
                        start);
    }
    p->value = std::move(m);
    p->zero_grad();
  }
}

std::vector<std::size_t> read_dims(ByteReader& r, const char* what, std::uint32_t min_count) {
  const std::uint64_t at = r.offset();
  const std::uint32_t count = r.u32();
  if (count < min_count || count > kMaxDims) {
    throw FormatError(std::string("implausible ") + what + " count " + std::to_string(count), at);
  }
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t pos = r.offset();
    const std::uint32_t d = r.u32();
    if (d == 0 || d > kMaxDims) throw FormatError(std::string("invalid ") + what + " entry", pos);
    dims.push_back(d);
  }
  return dims;
}

double read_rate(ByteReader& r) {
  const std::uint64_t at = r.offset();
  const double rate = r.f64();
  if (!(rate >= 0.0 && rate < 1.0)) throw FormatError("dropout rate out of range", at);
  return rate;
}

}  // namespace

std::string encode_gat(const GatModel& model) {
  ByteWriter w;
  w.magic(kGatMagic);
  w.u32(static_cast<std::uint32_t>(model.dims().size()));
  for (std::size_t d : model.dims()) w.u32(static_cast<std::uint32_t>(d));
  w.f64(model.dropout_rate());
  write_params(w, model.parameters());
  return w.take();
}

GatModel decode_gat(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kGatMagic);
  auto dims = read_dims(r, "dims", 2);
  const double rate = read_rate(r);
  // Shapes come from the dims; values are overwritten below.
  GatModel model = init_model(dims, 0, rate);
  read_params(r, model.parameters());
  r.expect_end();
  return model;
}

void save_gat(const GatModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_gat(model));
}

GatModel load_gat(const std::filesystem::path& path) { return decode_gat(read_file_bytes(path)); }

std::string encode_bvector(const BVectorModel& model) {
  ByteWriter w;
  w.magic(kBVecMagic);
  w.u32(model.ops());
  w.u32(static_cast<std::uint32_t>(model.input_dim()));
  w.u32(static_cast<std::uint32_t>(model.hidden().size()));
  for (std::size_t h : model.hidden()) w.u32(static_cast<std::uint32_t>(h));
  w.u8(static_cast<std::uint8_t>(model.pooling()));
  w.f64(model.dropout_rate());
  write_params(w, model.parameters());
  return w.take();
}

BVectorModel decode_bvector(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kBVecMagic);
  std::uint64_t at = r.offset();
  const std::uint32_t ops = r.u32();
  if (ops == 0 || (ops & ~0xfu) != 0) throw FormatError("invalid b-vector op mask", at);
  at = r.offset();
  const std::uint32_t dim = r.u32();
  if (dim == 0 || dim > kMaxDims) throw FormatError("invalid input dim", at);
  auto hidden = read_dims(r, "hidden width", 0);
  at = r.offset();
  const std::uint8_t pooling = r.u8();
  if (pooling > 1) throw FormatError("invalid pooling tag", at);
  const double rate = read_rate(r);
  BVectorModel model =
      init_bvector(ops, dim, hidden, 0, rate, static_cast<PairPooling>(pooling));
  read_params(r, model.parameters());
  r.expect_end();
  return model;
}

void save_bvector(const BVectorModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_bvector(model));
}

BVectorModel load_bvector(const std::filesystem::path& path) {
  return decode_bvector(read_file_bytes(path));
}

std::string checkpoint_kind(std::string_view bytes) {
  if (bytes.substr(0, kGatMagic.size()) == kGatMagic) return std::string(kGatMagic);
  if (bytes.substr(0, kBVecMagic.size()) == kBVecMagic) return std::string(kBVecMagic);
  return {};
}

}  // namespace gatsv
