#include "spred/common.hpp"

#include <cmath>

#include "spred/rng.hpp"

namespace spred {

namespace {

std::string budget_message(std::size_t required, std::size_t budget) {
  auto mib = [](std::size_t b) { return std::to_string(b / (1024 * 1024)); };
  return "memory budget exceeded: optimizer needs " + std::to_string(required) +
         " bytes (~" + mib(required) + " MiB), budget is " +
         std::to_string(budget) + " bytes (~" + mib(budget) + " MiB)";
}

}  // namespace

MemoryBudgetError::MemoryBudgetError(std::size_t required, std::size_t budget)
    : Error(budget_message(required, budget)),
      required_(required),
      budget_(budget) {}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phase = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(phase);
  has_spare_ = true;
  return r * std::cos(phase);
}

}  // namespace spred
