#pragma once

#include <iosfwd>
#include <string>

#include "oneshot/grid.hpp"

namespace oneshot {

/// CSV format: header `# grid: <nx>[,<nt>] spacing: <hx>[,<ht>]`, then one
/// value per line. Space-time fields are written as nt blocks of nx lines,
/// time-major. Values round-trip bit-exactly.
void write_field_csv(std::ostream& os, const Field& f);
void write_field_csv(const std::string& path, const Field& f);

Field read_field_csv(std::istream& is);
Field read_field_csv(const std::string& path);

}  // namespace oneshot
