#pragma once

#include <optional>
#include <vector>

namespace goanet::surrogate {

// Masking fractions below this floor would blow up the 1/m_s distortion term.
inline constexpr double kDefaultMaskFloor = 1e-4;

// Vector-quantization cost of one frame at full masks: a 256-dimensional
// distance costs 769 ops (256 * 3 + 1), searched over 1023 codewords for each
// of the 512 latent vectors.
inline constexpr double kVqOpsAtFullMasks = 402783744.0;  // 769 * 1023 * 512

// Latent vectors per frame and bits per quantization index (log2 of the
// 1024-codeword codebook).
inline constexpr double kLatentVectors = 512.0;
inline constexpr double kIndexBits = 10.0;

// Fitted separable distortion surrogate G(m_x, m_s) = a / m_x^b + c / m_s.
struct Params {
  double a = 2.58e-1;
  double b = 1.20e-1;
  double c = 2.95e-3;
  std::optional<double> fit_residual;  // mean-squared fit error when fitted
};

struct MaskPair {
  double m_x = 1.0;
  double m_s = 1.0;
};

// Validates both fractions against [m_min, 1].
MaskPair make_mask_pair(double m_x, double m_s,
                        double m_min = kDefaultMaskFloor);

// Vector-quantization operations; linear in m_x + m_s.
double ops_count(double m_x, double m_s);
inline double ops_count(const MaskPair& m) { return ops_count(m.m_x, m.m_s); }

// Transmitted bits 512 * [10 (m_x + m_s) + 2].
double bits_count(double m_x, double m_s);
inline double bits_count(const MaskPair& m) { return bits_count(m.m_x, m.m_s); }

// Bits per pixel (1/256) * [10 (m_x + m_s) + 2].
double bits_per_pixel(double m_x, double m_s);

// Surrogate distortion; throws DomainError for masks below m_min.
double g_approx(double m_x, double m_s, const Params& p,
                double m_min = kDefaultMaskFloor);

// Elimination of m_x given m_s. Two closed forms are supported:
//   paper:      (a/c)^(1/b)      * m_s^(2/b)
//   stationary: (a b / c)^(1/(1+b)) * m_s^(2/(1+b))
// "stationary" is the exact first-order-condition pairing and the optimizer
// default; "paper" drops the b factor from the balance. Both clip to
// [m_min, 1].
enum class ReductionMode { paper, stationary };

double m_x_reduction(double m_s, const Params& p, ReductionMode mode,
                     double m_min = kDefaultMaskFloor);

struct FitSample {
  double m_x;
  double m_s;
  double distortion;
};

// Least-squares fit of (a, b, c) in the original space via damped
// Gauss-Newton, seeded by a log-space linear regression. Throws FitError on
// degenerate sample sets (single-valued axis, flat surface).
Params fit(const std::vector<FitSample>& samples);

}  // namespace goanet::surrogate
