#ifndef PNPBO_THEORY_HPP
#define PNPBO_THEORY_HPP

#include <string>
#include <vector>

#include "pnpbo/problem.hpp"

namespace pnpbo {

// Closed-form constants derived from the declared smoothness parameters.
// r_bound bounds ||z*(x)||, l_ystar/l_zstar are the Lipschitz constants of
// the lower-level and implicit solution maps, l_hyper the smoothness of the
// total objective; c1..c9, l_z_sq, m1..m3 are the composite constants the
// step-size conditions are phrased in; l_pp and tau enter the ZeroSARAH
// variance recursion.
struct ConstantsLedger {
  SmoothnessParams params;
  int n = 0;
  int m = 0;

  double r_bound = 0;   // cf / mu
  double l_ystar = 0;   // lg1 / mu
  double l_zstar = 0;
  double l_hyper = 0;
  double c_bar = 0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
  double c6 = 0, c7 = 0, c8 = 0, c9 = 0;
  double l_z_sq = 0;
  double l_pp = 0;      // max{4 lf^2, 8 lg2^2 r^2, 8 lg1^2}
  double tau = 0;       // max{n, m}
  double m1 = 0, m2 = 0, m3 = 0;
};

ConstantsLedger build_ledger(const SmoothnessParams& params, int n, int m);

struct StepSizes {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
};

struct InequalityRow {
  std::string name;
  double lhs = 0;
  double rhs = 0;

  bool ok() const { return lhs <= rhs; }
  double slack() const { return rhs - lhs; }
  // Relative slack used to pick the binding row; near 0 means tight.
  double relative_slack() const;
};

struct StepSizeCertificate {
  enum class Regime { biased, unbiased };
  Regime regime = Regime::biased;
  std::vector<InequalityRow> rows;
  bool feasible = false;
  std::string binding;       // row with the smallest relative slack
  double binding_lhs = 0;
  double binding_rhs = 0;
  double binding_ratio = 0;  // lhs / rhs of the binding row
};

// Values of the bracketed estimator terms (X_{k+1} eta + X'_{k+1} eta_hat)
// per channel, already evaluated at the given step sizes.
struct BiasedCoeffs {
  double bracket_x = 0;
  double bracket_y = 0;
  double bracket_z = 0;
};

// The same brackets plus the moving-average coefficient A''_{k+1} and the
// x-channel eta, which the unbiased conditions use on their own.
struct UnbiasedCoeffs {
  double bracket_x = 0;
  double bracket_y = 0;
  double bracket_z = 0;
  double a_pp = 0;
  double eta_x = 0;
};

// Per-algorithm bracket substitutions (constant-step form).
BiasedCoeffs sffba_coeffs(const ConstantsLedger& ledger, const StepSizes& steps,
                          double rho_bar, int batch);
BiasedCoeffs mseba_coeffs(const ConstantsLedger& ledger, const StepSizes& steps,
                          double rho_bar, double p, int batch);
BiasedCoeffs spaba_coeffs(const StepSizes& steps, double p, int batch);

// Extra rows a specific theorem pins besides the generic conditions.
std::vector<InequalityRow> sffba_extra_rows(const ConstantsLedger& ledger,
                                            const StepSizes& steps);
std::vector<InequalityRow> mseba_extra_rows(const ConstantsLedger& ledger,
                                            const StepSizes& steps);

StepSizeCertificate check_biased(const ConstantsLedger& ledger, const StepSizes& steps,
                                 const BiasedCoeffs& coeffs,
                                 const std::vector<InequalityRow>& extra_rows = {});

StepSizeCertificate check_unbiased(const ConstantsLedger& ledger,
                                   const StepSizes& steps, double rho,
                                   const UnbiasedCoeffs& coeffs);

// Full certificate for one of the supported biased algorithms
// (sffba, mseba, spaba), with the theorem's extra rows included.
StepSizeCertificate certify(const ConstantsLedger& ledger, const std::string& algorithm,
                            const StepSizes& steps, int batch, double rho_bar, double p);

struct StepSuggestion {
  StepSizes steps;
  int batch = 0;
  double rho_bar = 0;
  double p = 0;
  StepSizeCertificate certificate;
};

// Maximizes a constant alpha subject to the certificate, with beta and
// gamma tied to alpha by the coupling ratios, after filling the batch and
// momentum parameters from N = n + m. Supported: sffba, mseba, spaba.
// Throws std::invalid_argument for other algorithms and returns an
// infeasible certificate when no positive alpha passes.
StepSuggestion suggest_steps(const ConstantsLedger& ledger,
                             const std::string& algorithm, long long total_samples);

}  // namespace pnpbo

#endif
