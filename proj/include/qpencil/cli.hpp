#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "qpencil/linalg.hpp"

namespace qpencil {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/**
 * Batch entry point: qpencil <validate|solve|weyl|spectrum|residues|asympt|uniq> [options].
 * Results go to --out (or `out`); failures print a one-line JSON error record to `err`.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "1.5", "-2i", "i", "1.7+0.3i", "1e-3-2e-2i"; 'j' is accepted for 'i'.
cplx parse_complex(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace qpencil
