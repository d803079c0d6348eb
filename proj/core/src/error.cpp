#include "weaklab/error.hpp"

namespace weaklab {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kFormat: return "format";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kDivergence: return "divergence";
    case ErrorCategory::kConflict: return "conflict";
    case ErrorCategory::kNotFound: return "not_found";
  }
  return "internal";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kIo: return 3;
    case ErrorCategory::kFormat: return 4;
    case ErrorCategory::kData: return 5;
    case ErrorCategory::kDivergence: return 6;
    case ErrorCategory::kConflict: return 7;
    case ErrorCategory::kNotFound: return 8;
  }
  return 1;
}

}  // namespace weaklab
