#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dualmv::cli {

/// Tabular series data with a header row.
struct Series {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// CSV text with 17 significant digits per number.
std::string to_csv(const Series& s);

/// Runs the `dmv` command line. Returns 0 on success, 1 when a check failed and 2
/// on usage or input errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualmv::cli
