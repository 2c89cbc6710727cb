// SPDX-License-Identifier: Apache-2.0
#include "cobid/errors.hpp"

namespace cobid {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 3;
}

}  // namespace cobid
