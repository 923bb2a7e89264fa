#pragma once

#include <string>
#include <variant>

#include "dsm/common.hpp"

namespace dsm {

struct Dirichlet {};
struct Neumann {};
// du/dnu + lambda u = 0
struct Impedance {
  Complex lambda;
};
// Delta u + k^2 (1 + q) u = 0 inside
struct Penetrable {
  Complex q;
};

using ObstacleCondition = std::variant<Dirichlet, Neumann, Impedance>;

inline std::string describe(const ObstacleCondition& c) {
  if (std::holds_alternative<Dirichlet>(c)) return "dirichlet";
  if (std::holds_alternative<Neumann>(c)) return "neumann";
  const Complex l = std::get<Impedance>(c).lambda;
  return "impedance(" + std::to_string(l.real()) + "," + std::to_string(l.imag()) + ")";
}

}  // namespace dsm
