#include "wdl/harness/table.hpp"

#include "wdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace wdl::harness {

std::string format_real(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string format_cell(const Table::Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) {
        return format_real(*d);
    }
    if (const auto* i = std::get_if<long long>(&c)) {
        return std::to_string(*i);
    }
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') {
            quoted += '"';
        }
        quoted += ch;
    }
    return quoted + "\"";
}

} // namespace

void Table::add_row(std::vector<Cell> row)
{
    WDL_REQUIRE(row.size() == columns_.size(), InvalidArgument, "table: row width mismatch");
    rows_.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const
{
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    WDL_REQUIRE(it != columns_.end(), InvalidArgument, "table: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns_.begin());
}

double Table::number(std::size_t row, const std::string& name) const
{
    const Cell& c = rows_.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c)) {
        return *d;
    }
    if (const auto* i = std::get_if<long long>(&c)) {
        return static_cast<double>(*i);
    }
    throw InvalidArgument("table: column '" + name + "' is not numeric");
}

void Table::write_csv(std::ostream& os) const
{
    for (std::size_t k = 0; k < columns_.size(); ++k) {
        os << (k ? "," : "") << columns_[k];
    }
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            os << (k ? "," : "") << format_cell(row[k]);
        }
        os << '\n';
    }
}

void Table::write_csv(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    WDL_REQUIRE(out.good(), InvalidArgument, "table: cannot write '" + path + "'");
    write_csv(out);
}

Table Table::long_format(const std::string& experiment, const std::vector<std::string>& keys) const
{
    std::vector<std::string> cols{"experiment"};
    cols.insert(cols.end(), keys.begin(), keys.end());
    cols.push_back("quantity");
    cols.push_back("value");
    Table out(cols);
    std::vector<std::size_t> key_index;
    for (const auto& k : keys) {
        key_index.push_back(column(k));
    }
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (std::find(key_index.begin(), key_index.end(), c) != key_index.end() ||
                std::holds_alternative<std::string>(row[c])) {
                continue;
            }
            std::vector<Cell> r{experiment};
            for (std::size_t k : key_index) {
                r.push_back(row[k]);
            }
            r.emplace_back(columns_[c]);
            r.push_back(row[c]);
            out.add_row(std::move(r));
        }
    }
    return out;
}

nlohmann::json Table::to_json() const
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rows_) {
        nlohmann::json r = nlohmann::json::object();
        for (std::size_t k = 0; k < columns_.size(); ++k) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        r[columns_[k]] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_real(v));
                    } else {
                        r[columns_[k]] = v;
                    }
                },
                row[k]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace wdl::harness
