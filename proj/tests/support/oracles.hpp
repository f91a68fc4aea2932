#pragma once

// Straightforward reference implementations used to cross-check the library.
// Deliberately computed differently from the production code.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

/// Counts dialogs whose event turn is within k.
inline double fraction_within(const std::vector<std::optional<int>>& turns, int k) {
  int hits = 0;
  for (const auto& t : turns) {
    for (int turn = 1; turn <= k; ++turn) {
      if (t && *t == turn) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(turns.size());
}

/// ICC(2,1) from raw sums (computational ANOVA formulas).
inline double icc21(const std::vector<std::vector<double>>& x) {
  const double n = static_cast<double>(x.size());
  const double k = static_cast<double>(x.front().size());
  double total = 0.0, total_sq = 0.0;
  std::vector<double> row_sum(x.size(), 0.0), col_sum(x.front().size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      total += x[i][j];
      total_sq += x[i][j] * x[i][j];
      row_sum[i] += x[i][j];
      col_sum[j] += x[i][j];
    }
  }
  const double correction = total * total / (n * k);
  double rows = 0.0, cols = 0.0;
  for (double r : row_sum) rows += r * r;
  for (double c : col_sum) cols += c * c;
  const double ss_total = total_sq - correction;
  const double ss_rows = rows / k - correction;
  const double ss_cols = cols / n - correction;
  const double ss_err = ss_total - ss_rows - ss_cols;
  const double msr = ss_rows / (n - 1.0);
  const double msc = ss_cols / (k - 1.0);
  const double mse = ss_err / ((n - 1.0) * (k - 1.0));
  return (msr - mse) / (msr + (k - 1.0) * mse + k * (msc - mse) / n);
}

/// Pearson r via cov = E[xy] - E[x]E[y].
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double ex = 0, ey = 0, exy = 0, exx = 0, eyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += x[i];
    ey += y[i];
    exy += x[i] * y[i];
    exx += x[i] * x[i];
    eyy += y[i] * y[i];
  }
  ex /= n;
  ey /= n;
  exy /= n;
  exx /= n;
  eyy /= n;
  const double vx = exx - ex * ex, vy = eyy - ey * ey;
  if (vx <= 1e-12 || vy <= 1e-12) return std::nullopt;
  return (exy - ex * ey) / std::sqrt(vx * vy);
}

/// Mean of column d and how often each Likert value occurs.
struct Column {
  double mean = 0.0;
  std::array<std::size_t, 5> counts{};
};

inline Column likert_column(const std::vector<std::array<int, 4>>& rows, std::size_t d) {
  Column c;
  for (int value = -2; value <= 2; ++value) {
    for (const auto& r : rows) {
      if (r[d] == value) {
        ++c.counts[static_cast<std::size_t>(value + 2)];
        c.mean += value;
      }
    }
  }
  c.mean /= static_cast<double>(rows.size());
  return c;
}

}  // namespace oracle
