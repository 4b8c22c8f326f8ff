#pragma once

#include <string>

namespace qcurv {

// Shortest decimal text that reads back to the same double ("%.17g" at worst).
std::string format_number(double x);

}  // namespace qcurv
