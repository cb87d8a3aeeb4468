#include "epsinas/weight_init.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "epsinas/error.hpp"
#include "epsinas/rng.hpp"

namespace epsinas {

namespace {

void fill_normal(Tensor& t, CounterRng& rng, double mean, double stddev) {
  for (float& v : t.data()) v = static_cast<float>(mean + stddev * rng.normal());
}

void fill_uniform(Tensor& t, CounterRng& rng, double lo, double hi) {
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
}

void fill_orthogonal(Tensor& t, CounterRng& rng) {
  if (t.rank() < 2) {
    throw ValueError("orthogonal init needs a tensor with at least 2 dims, got " + shape_to_string(t.shape()));
  }
  const auto rows = static_cast<Eigen::Index>(t.dim(0));
  const auto cols = static_cast<Eigen::Index>(t.numel() / t.dim(0));
  // QR of the tall orientation; the Q factor (sign-fixed by diag(R)) has
  // orthonormal columns, transposed back when the tensor is wide.
  const bool wide = rows < cols;
  const Eigen::Index m = wide ? cols : rows;
  const Eigen::Index n = wide ? rows : cols;
  Eigen::MatrixXd gauss(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) gauss(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  if (wide) q.transposeInPlace();
  float* dst = t.raw();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) dst[i * cols + j] = static_cast<float>(q(i, j));
  }
}

void init_embedding(Tensor& t, std::size_t param_index) {
  CounterRng rng(kEmbeddingSeed, param_index + 1);
  fill_normal(t, rng, 0.0, kEmbeddingStd);
}

}  // namespace

std::size_t fan_in(const Tensor& weight) { return weight.numel() / weight.dim(0); }

InitScheme InitScheme::from_name(std::string_view name, std::uint64_t seed) {
  InitScheme s;
  s.seed = seed;
  if (name == "constant") {
    s.kind = Kind::kConstant;
    s.a = 1.0;
  } else if (name == "uniform") {
    s.kind = Kind::kUniform;
    s.a = 0.0;
    s.b = 1.0;
  } else if (name == "normal") {
    s.kind = Kind::kNormal;
    s.a = 0.0;
    s.b = 1.0;
  } else if (name == "kaiming_uniform") {
    s.kind = Kind::kKaimingUniform;
  } else if (name == "kaiming_normal") {
    s.kind = Kind::kKaimingNormal;
  } else if (name == "orthogonal") {
    s.kind = Kind::kOrthogonal;
  } else {
    throw ValueError("unknown init scheme '" + std::string(name) + "'");
  }
  return s;
}

void InitScheme::validate() const {
  if (kind == Kind::kUniform && !(b > a)) throw ValueError("uniform init needs hi > lo");
  if (kind == Kind::kNormal && !(b > 0.0)) throw ValueError("normal init needs std > 0");
  if (kind == Kind::kConstant && !std::isfinite(a)) throw ValueError("constant init value must be finite");
}

std::string InitScheme::name() const {
  switch (kind) {
    case Kind::kConstant: return "constant";
    case Kind::kUniform: return "uniform";
    case Kind::kNormal: return "normal";
    case Kind::kKaimingUniform: return "kaiming_uniform";
    case Kind::kKaimingNormal: return "kaiming_normal";
    case Kind::kOrthogonal: return "orthogonal";
  }
  return "unknown";
}

void init_tensor(Tensor& t, const InitScheme& scheme, std::uint64_t stream) {
  scheme.validate();
  CounterRng rng(scheme.seed, stream);
  const double fan = static_cast<double>(t.rank() > 1 ? fan_in(t) : t.numel());
  switch (scheme.kind) {
    case InitScheme::Kind::kConstant: t.fill(static_cast<float>(scheme.a)); break;
    case InitScheme::Kind::kUniform: fill_uniform(t, rng, scheme.a, scheme.b); break;
    case InitScheme::Kind::kNormal: fill_normal(t, rng, scheme.a, scheme.b); break;
    case InitScheme::Kind::kKaimingUniform: {
      const double bound = std::sqrt(2.0) * std::sqrt(3.0 / fan);
      fill_uniform(t, rng, -bound, bound);
      break;
    }
    case InitScheme::Kind::kKaimingNormal: fill_normal(t, rng, 0.0, std::sqrt(2.0 / fan)); break;
    case InitScheme::Kind::kOrthogonal: fill_orthogonal(t, rng); break;
  }
}

std::string_view scope_name(ConstantScope scope) noexcept {
  return scope == ConstantScope::kAll ? "all" : "weights";
}

ConstantScope scope_from_name(std::string_view name) {
  if (name == "weights") return ConstantScope::kWeights;
  if (name == "all") return ConstantScope::kAll;
  throw ValueError("unknown constant-init scope '" + std::string(name) + "' (expected weights or all)");
}

void init_constant(Network& net, float value, ConstantScope scope) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params[i].value;
    switch (params[i].role) {
      case ParamRole::kEmbedding: init_embedding(t, i); break;
      case ParamRole::kConvWeight:
      case ParamRole::kLinearWeight: t.fill(value); break;
      case ParamRole::kBnGain: t.fill(scope == ConstantScope::kAll ? value : 1.0f); break;
      case ParamRole::kBnBias:
      case ParamRole::kLinearBias: t.fill(scope == ConstantScope::kAll ? value : 0.0f); break;
    }
  }
}

void init_random(Network& net, const InitScheme& scheme) {
  scheme.validate();
  if (scheme.kind == InitScheme::Kind::kConstant) {
    init_constant(net, static_cast<float>(scheme.a), ConstantScope::kAll);
    return;
  }
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params[i].value;
    switch (params[i].role) {
      case ParamRole::kBnGain: t.fill(1.0f); continue;
      case ParamRole::kBnBias:
      case ParamRole::kLinearBias: t.fill(0.0f); continue;
      case ParamRole::kConvWeight:
      case ParamRole::kLinearWeight:
      case ParamRole::kEmbedding: break;
    }
    init_tensor(t, scheme, i + 1);
  }
}

}  // namespace epsinas
