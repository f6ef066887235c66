#include "decohist/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

#include "decohist/errors.hpp"

namespace decohist::serialize {

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string csv_row(const std::vector<double>& values) {
    std::string row;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0) row += ',';
        row += format_double(values[k]);
    }
    row += '\n';
    return row;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    const std::filesystem::path parent = path.parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
        if (ec)
            throw numerical_failure("serialize: could not create output directory " +
                                    parent.string() + ": " + ec.message());
    }
    const std::filesystem::path temp = path.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw numerical_failure("serialize: could not open " + temp.string() +
                                    " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(temp, ec);
            throw numerical_failure("serialize: failed while writing " + temp.string());
        }
    }
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        throw numerical_failure("serialize: could not move output into place at " +
                                path.string());
    }
}

} // namespace decohist::serialize
