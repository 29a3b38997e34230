#pragma once
#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "finde/models.hpp"
#include "finde/rng.hpp"
#include "finde/tensor.hpp"

namespace finde {

// Ground-truth dynamics and samplers for the five benchmark systems.
//   mass-spring       N=2   (q, v)
//   two-body          N=8   (x1, y1, x2, y2, vx1, vy1, vx2, vy2), G=m1=m2=1
//   double-pendulum   N=8   same layout; simulated in polar coordinates,
//                           observed in Cartesian; m1=m2=1, g=9.8
//   fitzhugh-nagumo   N=4   (I_C, I_L, V_C, V_L); simulated as the 2-D (V, W)
//                           core with external current I, then embedded
//   kdv               N=50  periodic u(x) on 10 space units, mesh 0.2
enum class SystemKind { MassSpring, TwoBody, DoublePendulum, FitzHughNagumo, Kdv };

SystemKind system_kind_from_name(const std::string& s);
const char* system_kind_name(SystemKind k);
long system_width(SystemKind k);
double system_default_dt(SystemKind k);

// KdV discretization constants.
constexpr double kKdvAlpha = -6.0;
constexpr double kKdvBeta = 1.0;
constexpr double kKdvDomain = 10.0;
constexpr double kKdvDx = 0.2;
constexpr long kKdvN = 50;

struct SystemSpec {
  SystemKind kind = SystemKind::MassSpring;
  double dt = 0.1;
  long n_series = 100;
  long n_steps = 200;
  std::uint64_t seed = 0;
  double gen_rtol = 1e-10;
  double gen_atol = 1e-12;
};

// Presets: desk scale (100 series x 200 steps train, 10 series at one fifth of
// the full evaluation lengths) and full scale (1000 x 500 train, 10 x full
// eval).
enum class ScalePreset { Desk, Full };
SystemSpec make_system_spec(SystemKind kind, ScalePreset scale, bool eval,
                            std::uint64_t seed);

// Exact right-hand side in data space. Raises NonFiniteState when the two-body
// separation falls under 1e-8.
Eigen::VectorXd system_rhs(SystemKind kind, const Eigen::VectorXd& u);

// FitzHugh–Nagumo pieces: the 2-D core dynamics and the circuit embedding.
Eigen::Vector2d fhn_core_rhs(const Eigen::Vector2d& vw, double current);
Eigen::VectorXd fhn_embed(double V, double W, double current);

// Double-pendulum pieces: polar state is (θ1, θ2, ω1, ω2).
Eigen::VectorXd pend_polar_rhs(const Eigen::VectorXd& s, double l1, double l2);
Eigen::VectorXd pend_to_cartesian(const Eigen::VectorXd& s, double l1, double l2);
// Rod lengths are implied by the Cartesian state (they are conserved).
Eigen::VectorXd pend_to_polar(const Eigen::VectorXd& cart);

// KdV helpers.
Eigen::VectorXd kdv_grid();  // cell coordinates x_k = k·Δx
Eigen::VectorXd kdv_two_soliton(double k1, double d1, double k2, double d2);

struct SeriesInit {
  Eigen::VectorXd u0;       // data-space initial state
  Eigen::VectorXd gen0;     // generation-space initial state (may equal u0)
  nlohmann::json meta;      // sampled per-series parameters
};

// Deterministic given (spec.seed, series index); samplers follow the
// per-system distributions (two-body near-circular pair, pendulum polar
// draws, FHN (V, W, I) draws, KdV soliton pair with periodic separation ≥ 2).
// attempt > 0 selects an independent redraw substream for the same series;
// generate() uses it to replace draws whose trajectories leave the
// integrable region before the end of the horizon (possible for KdV: the
// central-difference semi-discretization can blow up in finite time during
// strong soliton collisions).
SeriesInit sample_initial(const SystemSpec& spec, long series_index,
                          long attempt = 0);

struct TrajectorySet {
  SystemKind kind = SystemKind::MassSpring;
  long n_state = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double gen_rtol = 1e-10;
  double gen_atol = 1e-12;
  std::vector<MatRM> series;  // each (n_steps+1) x n_state
  std::vector<nlohmann::json> series_meta;
  Eigen::VectorXd norm_mean;  // per state element over all samples
  Eigen::VectorXd norm_std;

  long n_series() const { return static_cast<long>(series.size()); }
  long n_steps() const { return series.empty() ? 0 : series[0].rows() - 1; }
};

// Integrates every series at generation tolerance (systems simulated in a
// different space are transformed sample-by-sample) and records
// normalization statistics. A draw whose exact trajectory blows up before
// the end of the horizon is replaced by a deterministic redraw (attempt
// substreams); the series metadata then carries "resampled": <attempts>.
// Raises NoConvergence after 32 failed attempts for one series.
TrajectorySet generate(const SystemSpec& spec);

// Closed-form invariants for a series of the given system (constants such as
// rod lengths come from the series metadata). The same objects plug into
// model banks as analytic components.
std::vector<AnalyticInvariant> invariant_catalog(SystemKind kind,
                                                 const nlohmann::json& series_meta);

struct AuditRow {
  std::string invariant;
  double max_abs_drift = 0.0;  // max over series/steps of |V(uˢ)−V(u⁰)|
  double max_rel_drift = 0.0;  // same, divided by 1+|V(u⁰)|
};

// Drift of every catalog invariant along every series.
std::vector<AuditRow> audit_invariants(const TrajectorySet& data);

// Dataset directory: manifest.json + data.f64 (little-endian float64, layout
// [series][step][state]).
void save_dataset(const std::string& dir, const TrajectorySet& data);
TrajectorySet load_dataset(const std::string& dir);

}  // namespace finde
