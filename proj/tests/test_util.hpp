#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkdim/systems.hpp"

#ifndef FKDIM_GOLDEN_DIR
#error "FKDIM_GOLDEN_DIR must be defined by the build"
#endif

namespace test {

inline std::vector<fkdim::SystemSpec> all_systems() {
  using namespace fkdim;
  return {full_shift(2),
          full_shift(3, 4.0),
          cube_shift(1),
          cube_shift(2),
          doubling_map(),
          tent_map(),
          identity_map(),
          product_system(doubling_map(), full_shift(2), Combiner::Max),
          product_system(tent_map(), identity_map(), Combiner::Sum)};
}

inline std::string golden_path(const std::string& name) {
  return std::string(FKDIM_GOLDEN_DIR) + "/" + name;
}

inline std::string read_golden(const std::string& name) {
  std::ifstream in(golden_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing golden file " + name);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace test
