#include "cdl/rng.hpp"

namespace cdl::detail {

const ZigguratTables& ziggurat() noexcept {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace cdl::detail
