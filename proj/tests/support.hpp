#pragma once

#include "tsfilt/affine.hpp"
#include "tsfilt/dde.hpp"
#include "tsfilt/model.hpp"
#include "tsfilt/synthesis.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace tsfilt::testing {

std::filesystem::path data_file(const std::string& name);
std::filesystem::path test_file(const std::string& name);

TSModel example1();
TSModel example2();
/// Loads a bundled model document after applying `edit` to its JSON.
TSModel edited_model(const std::string& name, const std::function<void(nlohmann::json&)>& edit);

/// Stable two-rule filter picked by hand (no synthesis involved).
FilterRealization hand_filter(const TSModel& model);

/// min t s.t. A + t I >= 0.
AffineLMIProblem eigenvalue_problem(const Matrix& A);

/// min t over x in a box s.t. F_a(x) + t I >= 0; `tight` additionally has
/// F_b(x) + t I >= 0, so its optimum can only be larger.
struct NestedPair {
  AffineLMIProblem loose, tight;
};
NestedPair random_nested_pair(std::mt19937_64& rng);

/// log2 of successive step-halving differences of zeta(horizon) for the smooth
/// fixture (zero history, disturbance starting at zero).
std::vector<double> rk4_order_exponents(const TSModel& model, const FilterRealization& filter, double horizon,
                                        const std::vector<double>& steps);

struct CliResult {
  int code = 0;
  std::string out, err;
};
CliResult cli(const std::vector<std::string>& args);

std::filesystem::path temp_path(const std::string& name);

}  // namespace tsfilt::testing
