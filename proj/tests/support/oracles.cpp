#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace oracle {

std::vector<double> singular_values(std::size_t rows, std::size_t cols,
                                    const std::vector<double>& row_major) {
  // Columns of an m x n matrix with m >= n; transpose when needed.
  const bool transpose = rows < cols;
  const std::size_t m = transpose ? cols : rows;
  const std::size_t n = transpose ? rows : cols;
  std::vector<std::vector<long double>> col(n, std::vector<long double>(m));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const long double v = row_major[i * cols + j];
      if (transpose) {
        col[i][j] = v;
      } else {
        col[j][i] = v;
      }
    }
  }
  const long double eps = 1e-30L;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        long double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t k = 0; k < m; ++k) {
          alpha += col[p][k] * col[p][k];
          beta += col[q][k] * col[q][k];
          gamma += col[p][k] * col[q][k];
        }
        if (gamma == 0 || std::fabs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const long double zeta = (beta - alpha) / (2 * gamma);
        const long double t = (zeta >= 0 ? 1 : -1) / (std::fabs(zeta) + std::sqrt(1 + zeta * zeta));
        const long double c = 1 / std::sqrt(1 + t * t);
        const long double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const long double a = col[p][k];
          const long double b = col[q][k];
          col[p][k] = c * a - s * b;
          col[q][k] = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> out;
  for (const auto& c : col) {
    long double sq = 0;
    for (long double v : c) sq += v * v;
    out.push_back(static_cast<double>(std::sqrt(sq)));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

std::vector<double> softmax(const std::vector<double>& f) {
  long double total = 0;
  for (double v : f) total += std::exp(static_cast<long double>(v));
  std::vector<double> out;
  for (double v : f) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / total));
  return out;
}

double frobenius_diff(const std::vector<double>& a, const std::vector<double>& b) {
  long double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    sq += d * d;
  }
  return static_cast<double>(std::sqrt(sq));
}

double frobenius(const std::vector<double>& a) {
  return frobenius_diff(a, std::vector<double>(a.size(), 0.0));
}

double ks_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, sample[i] - lo, hi - sample[i]});
  }
  return d;
}

double Fixture::uniform(double lo, double hi) {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  const std::uint64_t x = state_ * 0x2545f4914f6cdd1dULL;
  return lo + (hi - lo) * static_cast<double>(x >> 11) * 0x1.0p-53;
}

cycleqd::Tensor Fixture::matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = uniform(lo, hi);
  return cycleqd::Tensor::matrix(rows, cols, std::move(v));
}

cycleqd::Tensor Fixture::vector(std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(lo, hi);
  return cycleqd::Tensor::vector(std::move(v));
}

cycleqd::ParameterSet layer(Fixture& f, std::size_t rows, std::size_t cols, double lo, double hi) {
  return cycleqd::ParameterSet({{"w", f.matrix(rows, cols, lo, hi)}, {"b", f.vector(rows, lo, hi)}});
}

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cycleqd-test-" + std::to_string(::getpid()) + "-" + tag + "-" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace oracle
