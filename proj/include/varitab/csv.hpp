#pragma once

#include <string>
#include <vector>

#include "varitab/schema.hpp"

namespace varitab {

// RFC-4180-style CSV: quoted fields, embedded commas/newlines, "" escapes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string format_csv_field(const std::string& field);

// Cells are parsed per column kind; empty cells (and unparseable numerics)
// load as missing. A binary cell outside {0,1,true,false,yes,no} is a hard
// parse error naming the row and column. When label_column is non-empty the
// header must contain it and its values load as integer class ids.
TableDataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema,
                      bool has_header, const std::string& label_column = "");

void save_csv(const TableDataset& dataset, const std::string& path,
              const std::string& label_column = "label");

// Schema manifest: one column per line, `name<TAB>kind[<TAB>k=v;k=v...]`.
std::vector<ColumnSchema> load_schema_manifest(const std::string& path);
void save_schema_manifest(const std::vector<ColumnSchema>& schema, const std::string& path);

}  // namespace varitab
