#pragma once

// Shared test oracles, deliberately structured differently from the library
// paths they check: recursive enumeration instead of iterative successor,
// sort-based medians instead of selection, Pascal recursion instead of the
// multiplicative binomial formula.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <umom/estimators.hpp>

namespace testsupport {

// All C(n,l) subset means of z via recursion, naive left-to-right sums.
inline void collect_subset_means(const std::vector<double>& z, std::size_t l,
                                 std::size_t start,
                                 std::vector<std::uint32_t>& current,
                                 std::vector<double>& means) {
  if (current.size() == l) {
    double s = 0.0;
    for (const auto j : current) s += z[j];
    means.push_back(s / static_cast<double>(l));
    return;
  }
  const std::size_t remaining = l - current.size();
  for (std::size_t j = start; j + remaining <= z.size(); ++j) {
    current.push_back(static_cast<std::uint32_t>(j));
    collect_subset_means(z, l, j + 1, current, means);
    current.pop_back();
  }
}

inline std::vector<double> brute_force_subset_means(const std::vector<double>& z,
                                                    std::size_t l) {
  std::vector<double> means;
  std::vector<std::uint32_t> current;
  collect_subset_means(z, l, 0, current, means);
  return means;
}

// Sort-based median with the same midpoint arithmetic as the library.
inline double sorted_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

inline double brute_force_block_umom(const umom::BlockMeans& bm) {
  return sorted_median(brute_force_subset_means(bm.z, bm.plan.l));
}

// Saturating binomial by Pascal's rule, independent of the multiplicative
// formula under test.
inline std::optional<std::uint64_t> pascal_binomial(std::uint64_t n,
                                                    std::uint64_t l) {
  if (l > n) return 0;
  std::vector<std::optional<std::uint64_t>> row(l + 1, std::uint64_t{0});
  row[0] = 1;
  for (std::uint64_t i = 1; i <= n; ++i) {
    for (std::uint64_t j = std::min(i, l); j >= 1; --j) {
      if (!row[j] || !row[j - 1]) {
        row[j] = std::nullopt;
        continue;
      }
      const std::uint64_t a = *row[j];
      const std::uint64_t b = *row[j - 1];
      row[j] = (a > UINT64_MAX - b) ? std::optional<std::uint64_t>{}
                                    : std::optional<std::uint64_t>{a + b};
    }
  }
  return row[l];
}

// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, std::size_t intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i)
    acc += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Unique scratch directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "scratch") {
    static std::uint64_t counter = 0;
    static const std::uint64_t run_tag = std::random_device{}();
    path_ = std::filesystem::temp_directory_path() /
            ("umom_test_" + tag + "_" + std::to_string(run_tag) + "_" +
             std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace testsupport
