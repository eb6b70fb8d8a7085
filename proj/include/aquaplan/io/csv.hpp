#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "aquaplan/errors.hpp"

namespace aquaplan::io {

/// Nine significant digits; non-finite values print as nan, inf and -inf.
inline std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

/// One CSV field.
class Cell {
public:
    Cell(double v) : text_(format_real(v)) {}
    Cell(float v) : text_(format_real(v)) {}
    template <class T>
        requires std::is_integral_v<T>
    Cell(T v) : text_(std::to_string(v))
    {
    }
    Cell(bool v) : text_(v ? "1" : "0") {}
    Cell(std::string_view v) : text_(quote(v)) {}
    Cell(const std::string& v) : text_(quote(v)) {}
    Cell(const char* v) : text_(quote(v)) {}

    const std::string& text() const { return text_; }

private:
    static std::string quote(std::string_view v)
    {
        if (v.find_first_of(",\"\n") == std::string_view::npos)
            return std::string(v);
        std::string out = "\"";
        for (char c : v) {
            if (c == '"')
                out += '"';
            out += c;
        }
        return out + "\"";
    }

    std::string text_;
};

/// Comment lines (each prefixed "# "), then the header row, then data rows.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& comments,
              const std::vector<std::string>& columns)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(columns.size())
    {
        if (!out_)
            throw Error("cannot open '" + path + "' for writing");
        for (const auto& c : comments)
            out_ << "# " << c << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    void row(std::initializer_list<Cell> cells) { row(std::vector<Cell>(cells)); }

    void row(const std::vector<Cell>& cells)
    {
        if (cells.size() != width_)
            throw InternalError("csv: row width does not match the header of " + path_);
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i].text();
        out_ << '\n';
    }

    void close()
    {
        out_.close();
        if (!out_)
            throw Error("failed writing '" + path_ + "'");
    }

    ~CsvWriter()
    {
        if (out_.is_open())
            out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t width_;
};

} // namespace aquaplan::io
