#include "sdeflow/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace sdeflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double min_sym_eigenvalue(const Mat& m) {
  Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_square(const Mat& m, int d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    std::ostringstream os;
    os << what << " must be " << d << "x" << d << ", got " << m.rows() << "x" << m.cols();
    throw ConfigError(os.str());
  }
}

void require_ensemble(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble) {
  if (ensemble.empty()) throw PreconditionError("drift evaluation needs a non-empty ensemble");
  if (u.size() != model.dim() || ensemble.dim() != model.dim()) {
    std::ostringstream os;
    os << "dimension mismatch: model d=" << model.dim() << ", point d=" << u.size()
       << ", ensemble d=" << ensemble.dim();
    throw ConfigError(os.str());
  }
}

void require_indices(const ModelSpec& model, int k, int p) {
  const int kmax = model.diffusion().truncation();
  if (k < 0 || k > kmax) {
    std::ostringstream os;
    os << "diffusion index k=" << k << " outside [0, " << kmax << "]";
    throw IndexError(os.str());
  }
  if (p < 0 || p >= model.dim()) {
    std::ostringstream os;
    os << "column index p=" << p << " outside [0, " << model.dim() << ")";
    throw IndexError(os.str());
  }
}

// Radial factor of the saturating term: beta / (1 + |z|^2 / s^2).
struct SaturationTerms {
  double factor;  // 1 / (1 + r)
  double r;       // |z|^2 / s^2
};

SaturationTerms saturation(const SaturatingKernel& k, const Vec& z) {
  const double r = z.squaredNorm() / (k.scale * k.scale);
  return {1.0 / (1.0 + r), r};
}

}  // namespace

// ---------------------------------------------------------------------------

ParticleEnsemble::ParticleEnsemble(int dim, std::vector<Vec> positions) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("ensemble dimension out of range");
  assign(std::move(positions));
}

void ParticleEnsemble::assign(std::vector<Vec> positions) {
  for (const auto& x : positions) {
    if (x.size() != dim_) throw ConfigError("ensemble position has wrong dimension");
  }
  positions_ = std::move(positions);
  refresh_mean();
}

void ParticleEnsemble::refresh_mean() {
  mean_ = Vec::Zero(dim_);
  if (positions_.empty()) return;
  for (const auto& x : positions_) mean_ += x;
  mean_ /= static_cast<double>(positions_.size());
}

// ---------------------------------------------------------------------------

InteractionKernel InteractionKernel::linear(Mat a) {
  if (a.rows() != a.cols() || a.rows() < 1) throw ConfigError("kernel matrix A must be square");
  return InteractionKernel(LinearKernel{std::move(a)});
}

InteractionKernel InteractionKernel::saturating(Mat a, double beta, double scale) {
  if (a.rows() != a.cols() || a.rows() < 1) throw ConfigError("kernel matrix A must be square");
  if (!(beta >= 0.0)) throw ConfigError("saturating kernel needs beta >= 0");
  if (!(scale > 0.0)) throw ConfigError("saturating kernel needs scale s > 0");
  return InteractionKernel(SaturatingKernel{std::move(a), beta, scale});
}

int InteractionKernel::dim() const {
  return std::visit([](const auto& k) { return static_cast<int>(k.a.rows()); }, kind_);
}

std::string InteractionKernel::name() const {
  return std::holds_alternative<LinearKernel>(kind_) ? "linear" : "saturating";
}

Vec InteractionKernel::phi(const Vec& z) const {
  return std::visit(overloaded{
                        [&](const LinearKernel& k) -> Vec { return -(k.a * z); },
                        [&](const SaturatingKernel& k) -> Vec {
                          const auto s = saturation(k, z);
                          return -(k.a * z) - (k.beta * s.factor) * z;
                        },
                    },
                    kind_);
}

Mat InteractionKernel::jacobian(const Vec& z) const {
  return std::visit(
      overloaded{
          [&](const LinearKernel& k) -> Mat { return -k.a; },
          [&](const SaturatingKernel& k) -> Mat {
            const auto s = saturation(k, z);
            const int d = static_cast<int>(z.size());
            Mat dg = s.factor * Mat::Identity(d, d) -
                     (2.0 * s.factor * s.factor / (k.scale * k.scale)) * (z * z.transpose());
            return -k.a - k.beta * dg;
          },
      },
      kind_);
}

double InteractionKernel::divergence(const Vec& z) const {
  return std::visit(overloaded{
                        [&](const LinearKernel& k) { return -k.a.trace(); },
                        [&](const SaturatingKernel& k) {
                          const auto s = saturation(k, z);
                          const double d = static_cast<double>(z.size());
                          const double tr_dg = d * s.factor - 2.0 * s.factor * s.factor * s.r;
                          return -k.a.trace() - k.beta * tr_dg;
                        },
                    },
                    kind_);
}

bool InteractionKernel::mean_field_only() const {
  return std::holds_alternative<LinearKernel>(kind_);
}

double InteractionKernel::alpha() const {
  // The saturating term's symmetric Jacobian has spectrum in [-beta/8, beta]:
  // the radial eigenvalue (1 - r)/(1 + r)^2 bottoms out at r = 3.
  return std::visit(overloaded{
                        [](const LinearKernel& k) { return min_sym_eigenvalue(k.a); },
                        [](const SaturatingKernel& k) {
                          return min_sym_eigenvalue(k.a) - k.beta / 8.0;
                        },
                    },
                    kind_);
}

double InteractionKernel::lipschitz() const { return derivative_bound(); }

double InteractionKernel::derivative_bound() const {
  return std::visit(overloaded{
                        [](const LinearKernel& k) { return op_norm(k.a); },
                        [](const SaturatingKernel& k) { return op_norm(k.a) + k.beta; },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------

DiffusionKernel DiffusionKernel::mean_reverting(const Mat& gain, Mat offset) {
  const int d = static_cast<int>(gain.rows());
  return mean_reverting_columns(std::vector<Mat>(static_cast<std::size_t>(d), gain),
                                std::move(offset));
}

DiffusionKernel DiffusionKernel::mean_reverting_columns(std::vector<Mat> column_gains, Mat offset) {
  const int d = static_cast<int>(offset.rows());
  if (d < 1) throw ConfigError("diffusion offset D must be non-empty");
  require_square(offset, d, "diffusion offset D");
  if (static_cast<int>(column_gains.size()) != d) {
    throw ConfigError("mean-reverting diffusion needs one gain matrix per column");
  }
  for (const auto& c : column_gains) require_square(c, d, "mean-reverting gain C");
  return DiffusionKernel(MeanRevertingDiffusion{std::move(column_gains), std::move(offset)});
}

DiffusionKernel DiffusionKernel::frozen(Mat offset, Mat loading, Vec weights) {
  const int d = static_cast<int>(offset.rows());
  if (d < 1) throw ConfigError("diffusion offset D must be non-empty");
  require_square(offset, d, "diffusion offset D");
  require_square(loading, d, "frozen loading S");
  if (weights.size() != d) throw ConfigError("frozen profile weights w must have length d");
  return DiffusionKernel(FrozenDiffusion{std::move(offset), std::move(loading), std::move(weights)});
}

int DiffusionKernel::dim() const {
  return std::visit([](const auto& k) { return static_cast<int>(k.offset.rows()); }, kind_);
}

std::string DiffusionKernel::name() const {
  return std::holds_alternative<MeanRevertingDiffusion>(kind_) ? "mean_reverting" : "frozen";
}

Mat DiffusionKernel::value(const Vec& u, const ParticleEnsemble& ensemble) const {
  return std::visit(overloaded{
                        [&](const MeanRevertingDiffusion& k) -> Mat {
                          Mat b = k.offset;
                          const Vec gap = ensemble.mean() - u;
                          for (int p = 0; p < b.cols(); ++p) b.col(p) += k.column_gains[p] * gap;
                          return b;
                        },
                        [&](const FrozenDiffusion& k) -> Mat {
                          return k.offset + std::tanh(k.weights.dot(u)) * k.loading;
                        },
                    },
                    kind_);
}

Mat DiffusionKernel::column_jacobian(int p, const Vec& u, const ParticleEnsemble&) const {
  return std::visit(overloaded{
                        [&](const MeanRevertingDiffusion& k) -> Mat { return -k.column_gains[p]; },
                        [&](const FrozenDiffusion& k) -> Mat {
                          const double th = std::tanh(k.weights.dot(u));
                          const double sech2 = 1.0 - th * th;
                          return sech2 * (k.loading.col(p) * k.weights.transpose());
                        },
                    },
                    kind_);
}

double DiffusionKernel::column_divergence(int p, const Vec& u, const ParticleEnsemble&) const {
  return std::visit(overloaded{
                        [&](const MeanRevertingDiffusion& k) { return -k.column_gains[p].trace(); },
                        [&](const FrozenDiffusion& k) {
                          const double th = std::tanh(k.weights.dot(u));
                          return (1.0 - th * th) * k.loading.col(p).dot(k.weights);
                        },
                    },
                    kind_);
}

double DiffusionKernel::lipschitz_sq() const {
  return std::visit(overloaded{
                        [](const MeanRevertingDiffusion& k) {
                          double s = 0.0;
                          for (const auto& c : k.column_gains) s += std::pow(op_norm(c), 2);
                          return s;
                        },
                        [](const FrozenDiffusion& k) {
                          // ||S[:,p] w^T||_op = |S[:,p]| |w| and sech^2 <= 1.
                          return k.loading.squaredNorm() * k.weights.squaredNorm();
                        },
                    },
                    kind_);
}

bool DiffusionKernel::constant_derivative() const {
  return std::visit(overloaded{
                        [](const MeanRevertingDiffusion&) { return true; },
                        [](const FrozenDiffusion& k) {
                          return k.loading.isZero(0.0) || k.weights.isZero(0.0);
                        },
                    },
                    kind_);
}

DiffusionFamily::DiffusionFamily(std::vector<DiffusionKernel> kernels)
    : kernels_(std::move(kernels)) {}

double DiffusionFamily::lipschitz() const {
  double s = 0.0;
  for (const auto& k : kernels_) s += k.lipschitz_sq();
  return std::sqrt(s);
}

bool DiffusionFamily::constant_derivative() const {
  return std::all_of(kernels_.begin(), kernels_.end(),
                     [](const DiffusionKernel& k) { return k.constant_derivative(); });
}

ModelSpec::ModelSpec(int dim, InteractionKernel kernel, DiffusionFamily diffusion,
                     std::optional<double> alpha, std::optional<double> b_const)
    : dim_(dim), kernel_(std::move(kernel)), diffusion_(std::move(diffusion)) {
  if (dim < 1 || dim > kMaxDim) {
    std::ostringstream os;
    os << "model dimension d=" << dim << " outside [1, " << kMaxDim << "]";
    throw ConfigError(os.str());
  }
  if (kernel_.dim() != dim) throw ConfigError("interaction kernel dimension does not match d");
  for (const auto& k : diffusion_.kernels()) {
    if (k.dim() != dim) throw ConfigError("diffusion kernel dimension does not match d");
  }
  alpha_ = alpha.value_or(kernel_.alpha());
  b_const_ = b_const.value_or(diffusion_.lipschitz());
  if (!(b_const_ >= 0.0)) throw ConfigError("declared B must be >= 0");
}

// ---------------------------------------------------------------------------

Vec drift_eval(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble) {
  require_ensemble(model, u, ensemble);
  const auto& kernel = model.kernel();
  if (kernel.mean_field_only()) return kernel.phi(u - ensemble.mean());
  Vec acc = Vec::Zero(model.dim());
  for (const auto& v : ensemble.positions()) acc += kernel.phi(u - v);
  return acc / static_cast<double>(ensemble.size());
}

Mat drift_jacobian(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble) {
  require_ensemble(model, u, ensemble);
  const auto& kernel = model.kernel();
  if (kernel.mean_field_only()) return kernel.jacobian(u - ensemble.mean());
  Mat acc = Mat::Zero(model.dim(), model.dim());
  for (const auto& v : ensemble.positions()) acc += kernel.jacobian(u - v);
  return acc / static_cast<double>(ensemble.size());
}

double drift_divergence(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble) {
  require_ensemble(model, u, ensemble);
  const auto& kernel = model.kernel();
  if (kernel.mean_field_only()) return kernel.divergence(u - ensemble.mean());
  double acc = 0.0;
  for (const auto& v : ensemble.positions()) acc += kernel.divergence(u - v);
  return acc / static_cast<double>(ensemble.size());
}

DriftLinearization drift_linearization(const ModelSpec& model, const Vec& u,
                                       const ParticleEnsemble& ensemble) {
  require_ensemble(model, u, ensemble);
  const auto& kernel = model.kernel();
  if (kernel.mean_field_only()) {
    const Vec z = u - ensemble.mean();
    return {kernel.phi(z), kernel.jacobian(z)};
  }
  DriftLinearization out{Vec::Zero(model.dim()), Mat::Zero(model.dim(), model.dim())};
  for (const auto& v : ensemble.positions()) {
    const Vec z = u - v;
    out.value += kernel.phi(z);
    out.jacobian += kernel.jacobian(z);
  }
  const double inv_n = 1.0 / static_cast<double>(ensemble.size());
  out.value *= inv_n;
  out.jacobian *= inv_n;
  return out;
}

Mat diffusion_eval(const ModelSpec& model, int k, const Vec& u, const ParticleEnsemble& ensemble) {
  require_indices(model, k, 0);
  require_ensemble(model, u, ensemble);
  return model.diffusion()[static_cast<std::size_t>(k)].value(u, ensemble);
}

Mat diffusion_jacobian(const ModelSpec& model, int k, int p, const Vec& u,
                       const ParticleEnsemble& ensemble) {
  require_indices(model, k, p);
  require_ensemble(model, u, ensemble);
  return model.diffusion()[static_cast<std::size_t>(k)].column_jacobian(p, u, ensemble);
}

double diffusion_divergence(const ModelSpec& model, int k, int p, const Vec& u,
                            const ParticleEnsemble& ensemble) {
  require_indices(model, k, p);
  require_ensemble(model, u, ensemble);
  return model.diffusion()[static_cast<std::size_t>(k)].column_divergence(p, u, ensemble);
}

double liouville_drift_integrand(const ModelSpec& model, const Vec& u,
                                 const ParticleEnsemble& ensemble) {
  double value = drift_divergence(model, u, ensemble);
  double correction = 0.0;
  for (const auto& kernel : model.diffusion().kernels()) {
    for (int p = 0; p < model.dim(); ++p) {
      const Mat db = kernel.column_jacobian(p, u, ensemble);
      correction += (db * db).trace();
    }
  }
  return value - 0.5 * correction;
}

// ---------------------------------------------------------------------------

std::optional<int> max_moment_order(double alpha, double b_const) {
  if (b_const == 0.0) return std::nullopt;
  // Largest integer p with p < (2 alpha / B^2 + 1) / 2, strictly.
  const double bound = (2.0 * alpha / (b_const * b_const) + 1.0) / 2.0;
  if (!(bound > 0.0)) return 0;
  if (bound > 1e9) return std::numeric_limits<int>::max();
  const double c = std::ceil(bound);
  int p = static_cast<int>(c) - 1;
  // Guard the boundary against rounding in bound itself.
  while (p >= 1 && !(2.0 * alpha - b_const * b_const * (2.0 * p - 1.0) > 0.0)) --p;
  while (2.0 * alpha - b_const * b_const * (2.0 * (p + 1) - 1.0) > 0.0) ++p;
  return std::max(p, 0);
}

WellPosednessReport dissipativity_report(const ModelSpec& model, double q, std::uint64_t seed,
                                         int samples) {
  if (!(model.alpha() > 0.0)) {
    std::ostringstream os;
    os << "model is not dissipative: declared alpha=" << model.alpha() << " must be > 0";
    throw ConfigError(os.str());
  }

  const int d = model.dim();
  const double alpha = model.alpha();
  const double b = model.b_const();

  WellPosednessReport rep;
  rep.alpha = alpha;
  rep.b_const = b;
  rep.p_max = max_moment_order(alpha, b);
  rep.within_moment_range = !rep.p_max || *rep.p_max >= 1;
  rep.q = q;
  rep.q_margin = 2.0 * alpha - b * b * (4.0 * q - 1.0);
  rep.q_margin_ok = rep.q_margin > 0.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  auto random_point = [&] {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = box(rng);
    return x;
  };
  std::vector<Vec> atoms;
  for (int i = 0; i < 16; ++i) atoms.push_back(random_point());
  const ParticleEnsemble reference(d, std::move(atoms));

  const auto& kernel = model.kernel();
  const double lip_a = kernel.lipschitz();
  const double deriv_a = kernel.derivative_bound();
  const double sqrt_d = std::sqrt(static_cast<double>(d));

  double diss_violation = -std::numeric_limits<double>::infinity();
  double div_violation = -std::numeric_limits<double>::infinity();
  bool lip_ok = true;
  bool deriv_ok = true;
  for (int s = 0; s < samples; ++s) {
    const Vec u = random_point();
    // Mix far and near pairs so the local (derivative) regime is also probed.
    Vec v = random_point();
    if (s % 2 == 1) v = u + 1e-2 * (v - u);
    const Vec z = u - v;
    const double z2 = z.squaredNorm();

    const double lhs = z.dot(kernel.phi(u) - kernel.phi(v)) + alpha * z2;
    diss_violation = std::max(diss_violation, lhs / std::max(1.0, z2));

    div_violation = std::max(div_violation, drift_divergence(model, u, reference) + d * alpha);

    const double tol = 1e-9 * (1.0 + std::sqrt(z2));
    const double da = (drift_eval(model, u, reference) - drift_eval(model, v, reference)).norm();
    if (da > lip_a * std::sqrt(z2) + tol) lip_ok = false;
    double db2 = 0.0;
    for (const auto& kb : model.diffusion().kernels()) {
      db2 += (kb.value(u, reference) - kb.value(v, reference)).squaredNorm();
    }
    if (std::sqrt(db2) > b * std::sqrt(z2) + tol) lip_ok = false;

    // Growth: a and b are affine-bounded; this only rejects non-finite output.
    const double growth = drift_eval(model, u, reference).norm();
    if (!std::isfinite(growth)) lip_ok = false;

    double hs2 = 0.0;
    for (const auto& kb : model.diffusion().kernels()) {
      for (int p = 0; p < d; ++p) hs2 += kb.column_jacobian(p, u, reference).squaredNorm();
    }
    if (std::sqrt(hs2) > b * sqrt_d * (1.0 + 1e-12) + 1e-12) deriv_ok = false;
    const Mat ja = kernel.jacobian(z);
    if (op_norm(ja) > deriv_a * (1.0 + 1e-12) + 1e-12) deriv_ok = false;
  }

  rep.dissipativity_violation = diss_violation;
  rep.dissipativity_ok = diss_violation <= 1e-12;
  rep.divergence_violation = div_violation;
  rep.lipschitz_growth_ok = lip_ok;
  rep.derivative_bounds_ok = deriv_ok && div_violation <= 1e-12;
  return rep;
}

}  // namespace sdeflow
