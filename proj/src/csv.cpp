#include "varitab/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varitab {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// shortest round-trip representation
std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trimmed(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

bool parse_binary(const std::string& s, bool& out) {
    const std::string t = lower(trimmed(s));
    if (t == "1" || t == "true" || t == "yes") {
        out = true;
        return true;
    }
    if (t == "0" || t == "false" || t == "no") {
        out = false;
        return true;
    }
    return false;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    quoted = true;
                    field_started = true;
                } else {
                    field += c;  // stray quote inside unquoted field, keep it
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

std::string format_csv_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

TableDataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema,
                      bool has_header, const std::string& label_column) {
    const auto records = parse_csv(read_file(path));
    if (records.empty()) throw std::runtime_error("'" + path + "' is empty");

    // field index per schema column (and the label column)
    std::vector<size_t> col_index(schema.size());
    size_t label_index = SIZE_MAX;
    size_t first_data = 0;
    if (has_header) {
        const auto& header = records[0];
        for (size_t c = 0; c < schema.size(); ++c) {
            auto it = std::find(header.begin(), header.end(), schema[c].name);
            if (it == header.end()) {
                throw std::runtime_error("'" + path + "': schema column '" + schema[c].name +
                                         "' not found in header");
            }
            col_index[c] = static_cast<size_t>(it - header.begin());
        }
        if (!label_column.empty()) {
            auto it = std::find(header.begin(), header.end(), label_column);
            if (it == header.end()) {
                throw std::runtime_error("'" + path + "': label column '" + label_column +
                                         "' not found in header");
            }
            label_index = static_cast<size_t>(it - header.begin());
        }
        first_data = 1;
    } else {
        if (!label_column.empty()) {
            throw std::runtime_error("load_csv: label extraction requires a header row");
        }
        for (size_t c = 0; c < schema.size(); ++c) col_index[c] = c;
    }

    TableDataset ds;
    ds.name = path;
    ds.schema = schema;
    std::vector<int> labels;

    for (size_t r = first_data; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() == 1 && rec[0].empty()) continue;  // trailing blank line
        const size_t data_row = r - first_data + 1;       // 1-based for messages
        Row row;
        for (size_t c = 0; c < schema.size(); ++c) {
            const ColumnSchema& col = schema[c];
            std::string raw = col_index[c] < rec.size() ? rec[col_index[c]] : "";
            if (trimmed(raw).empty()) {
                row[col.name] = std::monostate{};
                continue;
            }
            switch (col.kind) {
                case ColumnKind::categorical:
                    row[col.name] = raw;
                    break;
                case ColumnKind::binary: {
                    bool b = false;
                    if (!parse_binary(raw, b)) {
                        throw std::runtime_error("'" + path + "' row " + std::to_string(data_row) +
                                                 ", column '" + col.name + "': '" + raw +
                                                 "' is not a binary value");
                    }
                    row[col.name] = b;
                    break;
                }
                case ColumnKind::numerical: {
                    double v = 0.0;
                    if (parse_double(raw, v)) {
                        row[col.name] = v;
                    } else {
                        row[col.name] = std::monostate{};
                    }
                    break;
                }
            }
        }
        ds.rows.push_back(std::move(row));
        if (label_index != SIZE_MAX) {
            const std::string raw =
                label_index < rec.size() ? trimmed(rec[label_index]) : std::string();
            int y = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), y);
            if (ec != std::errc() || p != raw.data() + raw.size() || y < 0) {
                throw std::runtime_error("'" + path + "' row " + std::to_string(data_row) +
                                         ": label '" + raw + "' is not a class id");
            }
            labels.push_back(y);
        }
    }
    if (label_index != SIZE_MAX) ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

void save_csv(const TableDataset& dataset, const std::string& path,
              const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");

    for (size_t c = 0; c < dataset.schema.size(); ++c) {
        if (c) out << ',';
        out << format_csv_field(dataset.schema[c].name);
    }
    if (dataset.labels) out << ',' << format_csv_field(label_column);
    out << '\n';

    for (size_t r = 0; r < dataset.rows.size(); ++r) {
        for (size_t c = 0; c < dataset.schema.size(); ++c) {
            if (c) out << ',';
            auto it = dataset.rows[r].find(dataset.schema[c].name);
            if (it == dataset.rows[r].end() || cell_missing(it->second)) continue;
            const Cell& cell = it->second;
            if (const auto* s = std::get_if<std::string>(&cell)) {
                out << format_csv_field(*s);
            } else if (const auto* b = std::get_if<bool>(&cell)) {
                out << (*b ? '1' : '0');
            } else if (const auto* d = std::get_if<double>(&cell)) {
                out << format_double(*d);
            }
        }
        if (dataset.labels) out << ',' << (*dataset.labels)[r];
        out << '\n';
    }
}

std::vector<ColumnSchema> load_schema_manifest(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<ColumnSchema> schema;
    std::istringstream lines(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        std::vector<std::string> parts;
        size_t start = 0;
        while (true) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                parts.push_back(line.substr(start));
                break;
            }
            parts.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (parts.size() < 2) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) +
                                     ": expected `name<TAB>kind`");
        }
        ColumnSchema col;
        col.name = trimmed(parts[0]);
        col.kind = parse_column_kind(parts[1]);
        if (parts.size() >= 3 && !trimmed(parts[2]).empty()) {
            std::istringstream entries(parts[2]);
            std::string entry;
            while (std::getline(entries, entry, ';')) {
                entry = trimmed(entry);
                if (entry.empty()) continue;
                size_t eq = entry.find('=');
                if (eq == std::string::npos) {
                    throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) +
                                             ": codebook entry '" + entry + "' lacks '='");
                }
                const std::string key = trimmed(entry.substr(0, eq));
                const std::string value = trimmed(entry.substr(eq + 1));
                if (!col.codebook.emplace(key, value).second) {
                    throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) +
                                             ": duplicate codebook key '" + key + "'");
                }
            }
        }
        col.validate();
        schema.push_back(std::move(col));
    }
    if (schema.empty()) throw std::runtime_error("'" + path + "': no columns defined");
    return schema;
}

void save_schema_manifest(const std::vector<ColumnSchema>& schema, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& col : schema) {
        out << col.name << '\t' << column_kind_name(col.kind);
        if (!col.codebook.empty()) {
            out << '\t';
            bool first = true;
            for (const auto& [k, v] : col.codebook) {
                if (!first) out << ';';
                out << k << '=' << v;
                first = false;
            }
        }
        out << '\n';
    }
}

}  // namespace varitab
