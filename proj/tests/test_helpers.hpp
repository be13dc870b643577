#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "skelssl/gru.hpp"

namespace testutil {

using skelssl::GRUParams;
using skelssl::Mat;

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                      double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

inline GRUParams random_gru(int input_dim, int hidden, std::mt19937_64& rng,
                            double scale = 0.5) {
  GRUParams p = GRUParams::zeros(input_dim, hidden);
  std::vector<std::pair<std::string, Mat*>> entries;
  p.collect("g", entries);
  for (auto& [name, mat] : entries) *mat = random_mat(mat->rows(), mat->cols(), rng, scale);
  return p;
}

// Reference GRU step written with explicit scalar loops, kept independent of
// the library path it checks.
inline std::vector<double> reference_gru_step(const std::vector<double>& x,
                                              const std::vector<double>& h,
                                              const GRUParams& p) {
  const int in = p.input_dim();
  const int hid = p.hidden();
  auto affine = [&](const Mat& w, const Mat& u, const Mat& b, int j,
                    const std::vector<double>& hh) {
    double acc = b(0, j);
    for (int i = 0; i < in; ++i) acc += x[static_cast<std::size_t>(i)] * w(i, j);
    for (int i = 0; i < hid; ++i) acc += hh[static_cast<std::size_t>(i)] * u(i, j);
    return acc;
  };
  // Gates are per-unit; the candidate's recurrent term mixes all units of
  // (r ⊙ h), so compute the gates first.
  std::vector<double> out(static_cast<std::size_t>(hid));
  std::vector<double> z(static_cast<std::size_t>(hid)), r(static_cast<std::size_t>(hid));
  for (int j = 0; j < hid; ++j) {
    z[static_cast<std::size_t>(j)] =
        1.0 / (1.0 + std::exp(-affine(p.w_update, p.u_update, p.b_update, j, h)));
    r[static_cast<std::size_t>(j)] =
        1.0 / (1.0 + std::exp(-affine(p.w_reset, p.u_reset, p.b_reset, j, h)));
  }
  std::vector<double> rh(static_cast<std::size_t>(hid));
  for (int i = 0; i < hid; ++i) {
    rh[static_cast<std::size_t>(i)] =
        r[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < hid; ++j) {
    double cand = p.b_cand(0, j);
    for (int i = 0; i < in; ++i) cand += x[static_cast<std::size_t>(i)] * p.w_cand(i, j);
    for (int i = 0; i < hid; ++i) cand += rh[static_cast<std::size_t>(i)] * p.u_cand(i, j);
    cand = std::tanh(cand);
    out[static_cast<std::size_t>(j)] =
        (1.0 - z[static_cast<std::size_t>(j)]) * h[static_cast<std::size_t>(j)] +
        z[static_cast<std::size_t>(j)] * cand;
  }
  return out;
}

// Unique scratch directory under the test binary's working directory.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    path_ = std::filesystem::temp_directory_path() /
            ("skelssl_test_" + label + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::string out;
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace testutil
