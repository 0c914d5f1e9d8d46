#pragma once

#include <string>
#include <vector>

namespace ocs {

inline constexpr const char* kToolVersion = "ocs 1.0.0";

// 17 significant digits, shortest round-trip not required; fixed %.17g keeps
// reruns byte-identical.
std::string format_double(double v);

// CSV with a fixed column order and a config-hash comment header. No
// timestamps anywhere in the outputs.
class CsvWriter {
public:
    CsvWriter(std::vector<std::string> columns, const std::string& config_hash);
    void add_row(const std::vector<double>& values);
    void add_comment(const std::string& line); // emitted after the hash line
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::string> comments_;
    std::vector<std::vector<double>> rows_;
    std::string config_hash_;
};

// Minimal JSON emitter with caller-controlled key order (std::map would sort;
// we keep insertion order so file layout is stable and readable).
class JsonObject {
public:
    JsonObject& field(const std::string& key, double v);
    JsonObject& field(const std::string& key, int v);
    JsonObject& field(const std::string& key, const std::string& v);
    // without this overload a string literal would convert to bool, not string
    JsonObject& field(const std::string& key, const char* v) {
        return field(key, std::string(v));
    }
    JsonObject& field(const std::string& key, bool v);
    JsonObject& field(const std::string& key, const JsonObject& obj);
    JsonObject& field_array(const std::string& key, const std::vector<double>& v);
    JsonObject& field_raw(const std::string& key, const std::string& rendered_json);
    std::string str(int indent = 0) const;
    void write(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string json_escape(const std::string& s);

void write_text_file(const std::string& path, const std::string& content);

} // namespace ocs
