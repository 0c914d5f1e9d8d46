#include "ocs/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ocs/errors.hpp"

namespace ocs {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns, const std::string& config_hash)
    : columns_(std::move(columns)), config_hash_(config_hash) {}

void CsvWriter::add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
        throw ValidationError("csv row has " + std::to_string(values.size()) +
                              " cells, header has " + std::to_string(columns_.size()));
    rows_.push_back(values);
}

void CsvWriter::add_comment(const std::string& line) { comments_.push_back(line); }

std::string CsvWriter::str() const {
    std::ostringstream out;
    out << "# " << kToolVersion << "\n";
    out << "# config_hash = " << config_hash_ << "\n";
    for (const auto& c : comments_) out << "# " << c << "\n";
    for (size_t i = 0; i < columns_.size(); ++i)
        out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto& row : rows_) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            if (!std::isnan(row[i])) out << format_double(row[i]); // NaN prints as an empty cell
        }
        out << "\n";
    }
    return out.str();
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, str()); }

JsonObject& JsonObject::field(const std::string& key, double v) {
    if (std::isnan(v)) entries_.push_back({key, "null"});
    else entries_.push_back({key, format_double(v)});
    return *this;
}

JsonObject& JsonObject::field(const std::string& key, int v) {
    entries_.push_back({key, std::to_string(v)});
    return *this;
}

JsonObject& JsonObject::field(const std::string& key, const std::string& v) {
    entries_.push_back({key, "\"" + json_escape(v) + "\""});
    return *this;
}

JsonObject& JsonObject::field(const std::string& key, bool v) {
    entries_.push_back({key, v ? "true" : "false"});
    return *this;
}

JsonObject& JsonObject::field(const std::string& key, const JsonObject& obj) {
    entries_.push_back({key, obj.str()});
    return *this;
}

JsonObject& JsonObject::field_array(const std::string& key, const std::vector<double>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::isnan(v[i]) ? "null" : format_double(v[i]);
    }
    s += "]";
    entries_.push_back({key, s});
    return *this;
}

JsonObject& JsonObject::field_raw(const std::string& key, const std::string& rendered_json) {
    entries_.push_back({key, rendered_json});
    return *this;
}

std::string JsonObject::str(int indent) const {
    // nested objects arrive pre-rendered; re-indent their lines
    std::string pad(indent + 2, ' ');
    std::ostringstream out;
    out << "{\n";
    for (size_t i = 0; i < entries_.size(); ++i) {
        out << pad << "\"" << json_escape(entries_[i].first) << "\": ";
        const std::string& val = entries_[i].second;
        for (char c : val) {
            out << c;
            if (c == '\n') out << pad;
        }
        if (i + 1 < entries_.size()) out << ",";
        out << "\n";
    }
    out << std::string(indent, ' ') << "}";
    return out.str();
}

void JsonObject::write(const std::string& path) const { write_text_file(path, str() + "\n"); }

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if ((unsigned char)c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ValidationError("short write to '" + path + "'");
}

} // namespace ocs
