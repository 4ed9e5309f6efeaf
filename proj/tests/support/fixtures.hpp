#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dish/topology.hpp"

#ifndef DISH_FIXTURE_DIR
#error "DISH_FIXTURE_DIR must point at the fixture directory"
#endif

inline std::string fixture_path(const std::string& name) {
  return std::string(DISH_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline dish::Topology load_fixture(const std::string& name) {
  return dish::load_topology(read_file(fixture_path(name)));
}
