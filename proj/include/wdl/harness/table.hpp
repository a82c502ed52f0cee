#pragma once

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace wdl::harness {

/// Rectangular result table. Reals are written with %.17g so that equal
/// doubles always produce equal bytes.
class Table {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit Table(std::vector<std::string> columns = {}) : columns_(std::move(columns)) {}

    void add_row(std::vector<Cell> row);

    [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
    [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] double number(std::size_t row, const std::string& name) const;

    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;

    /// One row per numeric cell outside `keys`:
    /// experiment, <keys...>, quantity, value.
    [[nodiscard]] Table long_format(const std::string& experiment,
                                    const std::vector<std::string>& keys) const;

    [[nodiscard]] nlohmann::json to_json() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_real(double v);

} // namespace wdl::harness
