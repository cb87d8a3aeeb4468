#include "epsinas/data_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "epsinas/error.hpp"
#include "epsinas/rng.hpp"

namespace epsinas {

namespace {

static_assert(std::endian::native == std::endian::little, "batch I/O assumes a little-endian host");

constexpr char kMagic[4] = {'E', 'P', 'S', 'B'};

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("batch file '" + path + "' header is truncated");
  return v;
}

std::uintmax_t file_size(std::ifstream& in) {
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uintmax_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  return size;
}

}  // namespace

std::string_view batch_kind_name(BatchKind kind) noexcept {
  switch (kind) {
    case BatchKind::kReal: return "real";
    case BatchKind::kGreyscale: return "greyscale";
    case BatchKind::kRandomNormal: return "random_normal";
    case BatchKind::kRandomUniform: return "random_uniform";
    case BatchKind::kRandomUniformPos: return "random_uniform_pos";
  }
  return "unknown";
}

BatchKind batch_kind_from_name(std::string_view name) {
  for (auto k : {BatchKind::kReal, BatchKind::kGreyscale, BatchKind::kRandomNormal, BatchKind::kRandomUniform,
                 BatchKind::kRandomUniformPos}) {
    if (batch_kind_name(k) == name) return k;
  }
  throw ValueError("unknown batch kind '" + std::string(name) + "'");
}

void BatchSpec::validate() const {
  if (batch_size == 0) throw ValueError("batch size must be positive");
  for (std::size_t d : shape) {
    if (d == 0) throw ValueError("batch image dims must be positive");
  }
  if (kind == BatchKind::kReal) {
    if (!source_path) throw ValueError("real batches need a source file");
    if (shape != std::array<std::size_t, 3>{3, 32, 32}) throw ValueError("real batches are 3x32x32");
  }
}

Tensor make_batch(const BatchSpec& spec) {
  spec.validate();
  if (spec.kind == BatchKind::kReal) {
    Tensor images = load_cifar10_binary(*spec.source_path, spec.batch_size, spec.offset);
    standardize_cifar(images);
    return images;
  }
  const std::size_t n = spec.batch_size;
  Tensor out({n, spec.shape[0], spec.shape[1], spec.shape[2]});
  const std::size_t per_image = out.numel() / n;
  CounterRng rng(spec.seed);
  switch (spec.kind) {
    case BatchKind::kReal: break;
    case BatchKind::kGreyscale:
      for (std::size_t k = 0; k < n; ++k) {
        const float level = n == 1 ? 0.0f : static_cast<float>(static_cast<double>(k) / static_cast<double>(n - 1));
        std::fill_n(out.raw() + k * per_image, per_image, level);
      }
      break;
    case BatchKind::kRandomNormal:
      for (float& v : out.data()) v = static_cast<float>(rng.normal());
      break;
    case BatchKind::kRandomUniform:
      for (float& v : out.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      break;
    case BatchKind::kRandomUniformPos:
      for (float& v : out.data()) v = static_cast<float>(rng.uniform01());
      break;
  }
  return out;
}

std::size_t cifar10_record_count(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CIFAR-10 file '" + path + "'");
  const std::uintmax_t size = file_size(in);
  if (size % kCifarRecordBytes != 0) {
    throw IoError("CIFAR-10 file '" + path + "' is truncated: " + std::to_string(size) +
                  " bytes is not a multiple of 3073");
  }
  return static_cast<std::size_t>(size / kCifarRecordBytes);
}

Tensor load_cifar10_binary(const std::string& path, std::size_t count, std::size_t offset) {
  const std::size_t records = cifar10_record_count(path);
  if (count == 0 || offset > records || count > records - offset) {
    throw IoError("CIFAR-10 file '" + path + "' has " + std::to_string(records) + " records; cannot read " +
                  std::to_string(count) + " from offset " + std::to_string(offset));
  }
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(offset * kCifarRecordBytes));
  std::vector<unsigned char> buf(count * kCifarRecordBytes);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw IoError("short read from CIFAR-10 file '" + path + "'");
  }
  constexpr std::size_t kPixels = 3 * 32 * 32;
  Tensor out({count, 3, 32, 32});
  for (std::size_t r = 0; r < count; ++r) {
    const unsigned char* rec = buf.data() + r * kCifarRecordBytes + 1;
    float* dst = out.raw() + r * kPixels;
    for (std::size_t i = 0; i < kPixels; ++i) dst[i] = static_cast<float>(rec[i]) / 255.0f;
  }
  return out;
}

void standardize_cifar(Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw ShapeError("standardisation expects [N,3,H,W], got " + shape_to_string(images.shape()));
  }
  const std::size_t plane = images.dim(2) * images.dim(3);
  for (std::size_t b = 0; b < images.dim(0); ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      float* p = images.raw() + (b * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - kCifarMean[c]) / kCifarStd[c];
    }
  }
}

void save_batch(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!out) throw IoError("failed writing batch file '" + path + "'");
}

Tensor load_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open batch file '" + path + "'");
  const std::uintmax_t size = file_size(in);
  char magic[4] = {};
  if (!in.read(magic, sizeof magic)) throw IoError("batch file '" + path + "' is too short");
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("batch file '" + path + "' has bad magic");
  const std::uint32_t rank = read_u32(in, path);
  if (rank == 0 || rank > 8) throw IoError("batch file '" + path + "' has invalid rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = read_u32(in, path);
    if (d == 0) throw IoError("batch file '" + path + "' has a zero dimension");
  }
  const std::size_t numel = shape_numel(shape);
  const std::uintmax_t expected = 8 + 4 * static_cast<std::uintmax_t>(rank) + numel * sizeof(float);
  if (size != expected) {
    throw IoError("batch file '" + path + "' payload length mismatch: shape " + shape_to_string(shape) + " needs " +
                  std::to_string(expected) + " bytes, file has " + std::to_string(size));
  }
  std::vector<float> data(numel);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * sizeof(float)))) {
    throw IoError("short read from batch file '" + path + "'");
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace epsinas
