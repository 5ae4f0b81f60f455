#pragma once

#include "daef/types.hpp"

namespace daef {

struct StandardScaler {
  Vector means;
  Vector stds;  // population std; features below 1e-12 get 1
};

}  // namespace daef
