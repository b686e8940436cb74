#pragma once

// Shared test helpers. The finite-difference checker is the independent
// oracle for every analytic gradient in the library: it never touches the
// tape, only forward evaluations.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "conceptflow/tensor.hpp"

namespace cftest {

// Central finite differences against already-computed analytic gradients.
// Returns the worst relative error across all elements of all params.
inline double fd_rel_error(std::vector<conceptflow::Tensor> params,
                           const std::function<double()>& forward_value,
                           double eps = 1e-5) {
  double worst = 0.0;
  for (auto& p : params) {
    auto& vals = p.mutable_values();
    for (size_t i = 0; i < vals.size(); ++i) {
      double orig = vals[i];
      vals[i] = orig + eps;
      double up = forward_value();
      vals[i] = orig - eps;
      double down = forward_value();
      vals[i] = orig;
      double numeric = (up - down) / (2.0 * eps);
      double analytic = p.grad()[i];
      double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      worst = std::max(worst, std::fabs(numeric - analytic) / denom);
    }
  }
  return worst;
}

inline std::string write_temp_file(const std::string& name, const std::string& content) {
  std::filesystem::path dir = std::filesystem::path("cf_test_tmp");
  std::filesystem::create_directories(dir);
  std::filesystem::path p = dir / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

inline std::string data_path(const std::string& name) {
#ifdef CF_DATA_DIR
  return std::string(CF_DATA_DIR) + "/" + name;
#else
  return "data/" + name;
#endif
}

}  // namespace cftest
