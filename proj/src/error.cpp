#include "posbias/error.hpp"

namespace posbias {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::data:
      return "data error";
    case ErrorCategory::config:
      return "config error";
    case ErrorCategory::io:
      return "I/O error";
    case ErrorCategory::remote:
      return "remote error";
  }
  return "error";
}

}  // namespace posbias
