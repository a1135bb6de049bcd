#pragma once

#include <vector>

#include "uura/mig.hpp"

namespace uura {

// One stitching class per UE detected in the first sub-slot: a log-domain
// geometric center plus the codeword picked up in each decoded sub-slot.
struct StitchClass {
  mig::LogCenter center;
  std::vector<int> members;  // codeword index (1-based) per decoded sub-slot
};

struct ClassRegistry {
  int antennas = 0;
  std::vector<StitchClass> classes;

  int size() const { return int(classes.size()); }
  bool empty() const { return classes.empty(); }
};

}  // namespace uura
