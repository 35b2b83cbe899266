#pragma once

#include "sdeflow/ensemble.hpp"
#include "sdeflow/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sdeflow {

// ---------------------------------------------------------------------------
// Interaction kernels phi, entering the drift as a(u, mu) = int phi(u - v) mu(dv).
// ---------------------------------------------------------------------------

/// phi(z) = -A z.
struct LinearKernel {
  Mat a;
};

/// phi(z) = -A z - beta z / (1 + |z|^2 / s^2).
struct SaturatingKernel {
  Mat a;
  double beta = 0.0;
  double scale = 1.0;
};

class InteractionKernel {
 public:
  static InteractionKernel linear(Mat a);
  static InteractionKernel saturating(Mat a, double beta, double scale);

  int dim() const;
  std::string name() const;

  Vec phi(const Vec& z) const;
  Mat jacobian(const Vec& z) const;
  double divergence(const Vec& z) const;

  /// True when a(u, mu) only needs the mean of mu (linear phi).
  bool mean_field_only() const;

  /// Largest alpha with <u - v, phi(u) - phi(v)> <= -alpha |u - v|^2. Can be
  /// non-positive for kernels that are not dissipative.
  double alpha() const;
  double lipschitz() const;
  /// sup_z ||D phi(z)||_op.
  double derivative_bound() const;
  /// Hoelder exponent of D phi; both shipped kernels are smooth.
  double holder_exponent() const { return 1.0; }

  const std::variant<LinearKernel, SaturatingKernel>& variant() const { return kind_; }

 private:
  explicit InteractionKernel(std::variant<LinearKernel, SaturatingKernel> kind)
      : kind_(std::move(kind)) {}

  std::variant<LinearKernel, SaturatingKernel> kind_;
};

// ---------------------------------------------------------------------------
// Diffusion kernels b_k(u, mu), each a d x d matrix whose column p multiplies
// the p-th coordinate of the Brownian motion B_k.
// ---------------------------------------------------------------------------

/// Column p of b_k is C_p (m_mu - u) + D[:, p], with m_mu the ensemble mean.
struct MeanRevertingDiffusion {
  std::vector<Mat> column_gains;  // one C_p per column
  Mat offset;                     // D
};

/// b_k(u) = D + S tanh(<w, u>): measure independent, bounded derivative.
struct FrozenDiffusion {
  Mat offset;   // D
  Mat loading;  // S
  Vec weights;  // w
};

class DiffusionKernel {
 public:
  /// Same gain C for every column.
  static DiffusionKernel mean_reverting(const Mat& gain, Mat offset);
  static DiffusionKernel mean_reverting_columns(std::vector<Mat> column_gains, Mat offset);
  static DiffusionKernel frozen(Mat offset, Mat loading, Vec weights);

  int dim() const;
  std::string name() const;

  Mat value(const Vec& u, const ParticleEnsemble& ensemble) const;
  /// Jacobian in u of column p (0-based).
  Mat column_jacobian(int p, const Vec& u, const ParticleEnsemble& ensemble) const;
  double column_divergence(int p, const Vec& u, const ParticleEnsemble& ensemble) const;

  /// sum_p sup_u ||D b^{., p}||_op^2, this kernel's share of B^2.
  double lipschitz_sq() const;
  /// True when every column Jacobian is independent of (u, mu).
  bool constant_derivative() const;

  const std::variant<MeanRevertingDiffusion, FrozenDiffusion>& variant() const { return kind_; }

 private:
  explicit DiffusionKernel(std::variant<MeanRevertingDiffusion, FrozenDiffusion> kind)
      : kind_(std::move(kind)) {}

  std::variant<MeanRevertingDiffusion, FrozenDiffusion> kind_;
};

/// The truncated noise family b_0, ..., b_K. An empty family means no noise.
class DiffusionFamily {
 public:
  DiffusionFamily() = default;
  explicit DiffusionFamily(std::vector<DiffusionKernel> kernels);

  std::size_t size() const { return kernels_.size(); }
  bool empty() const { return kernels_.empty(); }
  /// K, the index of the last kernel; -1 for the noise-free family.
  int truncation() const { return static_cast<int>(kernels_.size()) - 1; }

  const DiffusionKernel& operator[](std::size_t k) const { return kernels_[k]; }
  const std::vector<DiffusionKernel>& kernels() const { return kernels_; }

  /// l2-aggregate Lipschitz constant B = sqrt(sum_{k,p} sup ||D b_k^{., p}||_op^2).
  double lipschitz() const;
  bool constant_derivative() const;

 private:
  std::vector<DiffusionKernel> kernels_;
};

/// Dimension, interaction kernel, and diffusion family, together with the
/// declared dissipativity constant alpha and the diffusion Lipschitz constant B.
class ModelSpec {
 public:
  /// alpha and B default to the analytic values of the shipped variants.
  ModelSpec(int dim, InteractionKernel kernel, DiffusionFamily diffusion,
            std::optional<double> alpha = std::nullopt,
            std::optional<double> b_const = std::nullopt);

  int dim() const { return dim_; }
  const InteractionKernel& kernel() const { return kernel_; }
  const DiffusionFamily& diffusion() const { return diffusion_; }
  double alpha() const { return alpha_; }
  double b_const() const { return b_const_; }

 private:
  int dim_;
  InteractionKernel kernel_;
  DiffusionFamily diffusion_;
  double alpha_;
  double b_const_;
};

// ---------------------------------------------------------------------------
// Coefficient evaluation against the empirical measure.
// ---------------------------------------------------------------------------

/// a(u, mu_N) = (1/N) sum_i phi(u - v_i).
Vec drift_eval(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble);
Mat drift_jacobian(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble);
double drift_divergence(const ModelSpec& model, const Vec& u, const ParticleEnsemble& ensemble);

/// a and Da in one pass over the ensemble.
struct DriftLinearization {
  Vec value;
  Mat jacobian;
};
DriftLinearization drift_linearization(const ModelSpec& model, const Vec& u,
                                       const ParticleEnsemble& ensemble);

Mat diffusion_eval(const ModelSpec& model, int k, const Vec& u, const ParticleEnsemble& ensemble);
/// D b_k^{., p}; p is a 0-based column index.
Mat diffusion_jacobian(const ModelSpec& model, int k, int p, const Vec& u,
                       const ParticleEnsemble& ensemble);
double diffusion_divergence(const ModelSpec& model, int k, int p, const Vec& u,
                            const ParticleEnsemble& ensemble);

/// div a - 1/2 sum_{k,p} tr((D b_k^{., p})^2): the integrand of the
/// bounded-variation part of ln det Dx.
double liouville_drift_integrand(const ModelSpec& model, const Vec& u,
                                 const ParticleEnsemble& ensemble);

// ---------------------------------------------------------------------------
// Well-posedness and dissipativity diagnostics.
// ---------------------------------------------------------------------------

struct WellPosednessReport {
  double alpha = 0.0;
  double b_const = 0.0;
  /// Largest integer p >= 0 with 2 alpha - B^2 (2p - 1) > 0; nullopt means
  /// unbounded (B = 0).
  std::optional<int> p_max;
  bool within_moment_range = false;  // p_max >= 1

  double q = 0.0;
  double q_margin = 0.0;  // 2 alpha - B^2 (4q - 1)
  bool q_margin_ok = false;

  /// Largest observed <u-v, phi(u)-phi(v)> + alpha |u-v|^2 over random pairs.
  double dissipativity_violation = 0.0;
  bool dissipativity_ok = false;
  /// Largest observed div a(u) + d alpha.
  double divergence_violation = 0.0;
  bool lipschitz_growth_ok = false;  // growth spot check
  bool derivative_bounds_ok = false;  // derivative spot check

  bool all_ok() const {
    return within_moment_range && q_margin_ok && dissipativity_ok && lipschitz_growth_ok &&
           derivative_bounds_ok;
  }
};

/// Largest integer p >= 0 with 2 alpha - B^2 (2p - 1) > 0 (nullopt when B = 0).
std::optional<int> max_moment_order(double alpha, double b_const);

/// Throws ConfigError when the declared alpha is not positive.
WellPosednessReport dissipativity_report(const ModelSpec& model, double q,
                                         std::uint64_t seed = 20240917, int samples = 1000);

}  // namespace sdeflow
