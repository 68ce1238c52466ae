#include "citesim/table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "citesim/csv.hpp"

namespace citesim {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
}

bool DataTable::has_column(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t DataTable::column_index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::invalid_argument("no such column: " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> DataTable::column(const std::string& name) const {
  return columns_[column_index(name)];
}

void DataTable::add_column(std::string name, std::vector<double> values) {
  if (has_column(name)) throw std::invalid_argument("duplicate column: " + name);
  if (!names_.empty() && values.size() != rows_) {
    throw std::invalid_argument("column " + name + " has " + std::to_string(values.size()) +
                                " rows, table has " + std::to_string(rows_));
  }
  rows_ = values.size();
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

DataTable DataTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path.string() + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  DataTable table;
  std::vector<std::string> names;
  std::size_t start = 0;
  while (true) {
    const auto comma = header.find(',', start);
    names.push_back(header.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::vector<std::vector<double>> cols(names.size());

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t field = 0;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma - pos);
      if (field >= names.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": too many columns");
      }
      if (cell.empty()) {
        cols[field].push_back(kMissing);
      } else {
        try {
          cols[field].push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": bad number '" + cell + "'");
        }
      }
      ++field;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (field != names.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(names.size()) + " columns");
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    table.add_column(names[i], std::move(cols[i]));
  }
  return table;
}

void DataTable::write_csv(const std::filesystem::path& path) const {
  csv::Writer out(path, names_);
  for (std::size_t row = 0; row < rows_; ++row) {
    for (std::size_t col = 0; col < columns_.size(); ++col) {
      const double v = columns_[col][row];
      std::isnan(v) ? out.empty_field() : out.field(v);
    }
    out.end_row();
  }
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
  DataTable out;
  for (std::size_t col = 0; col < columns_.size(); ++col) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const std::size_t row : rows) values.push_back(columns_[col][row]);
    out.add_column(names_[col], std::move(values));
  }
  return out;
}

DataTable make_analysis_table(const CitationNetwork& net,
                              std::span<const DisruptionRecord> records,
                              std::span<const std::optional<double>> normcd) {
  const std::size_t n = records.size();
  std::vector<double> id(n), year(n), journal(n), team(n), group(n), refs(n);
  std::vector<double> ni(n), nj(n), nk(n), cd(n), cd_nok(n), rk(n), c_cw(n);
  std::vector<double> norm(n);

  for (std::size_t i = 0; i < n; ++i) {
    const DisruptionRecord& rec = records[i];
    const PaperNode& node = net.paper(rec.paper);
    id[i] = static_cast<double>(rec.paper);
    year[i] = static_cast<double>(node.year);
    journal[i] = node.journal_id ? static_cast<double>(*node.journal_id) : kMissing;
    team[i] = node.team_size ? static_cast<double>(*node.team_size) : kMissing;
    group[i] = node.group_label ? static_cast<double>(*node.group_label) : kMissing;
    refs[i] = static_cast<double>(net.reference_count(rec.paper));
    ni[i] = static_cast<double>(rec.n_i);
    nj[i] = static_cast<double>(rec.n_j);
    nk[i] = static_cast<double>(rec.n_k);
    cd[i] = rec.cd;
    cd_nok[i] = rec.cd_nok;
    rk[i] = rec.r_k;
    c_cw[i] = static_cast<double>(rec.citations());
    norm[i] = (!normcd.empty() && normcd[rec.paper]) ? *normcd[rec.paper] : kMissing;
  }

  DataTable table;
  table.add_column("id", std::move(id));
  table.add_column("year", std::move(year));
  table.add_column("journal_id", std::move(journal));
  table.add_column("team_size", std::move(team));
  table.add_column("group_label", std::move(group));
  table.add_column("r_p", std::move(refs));
  table.add_column("Ni", std::move(ni));
  table.add_column("Nj", std::move(nj));
  table.add_column("Nk", std::move(nk));
  table.add_column("CD", std::move(cd));
  table.add_column("CDnok", std::move(cd_nok));
  table.add_column("Rk", std::move(rk));
  table.add_column("c_cw", std::move(c_cw));
  if (!normcd.empty()) table.add_column("normcd", std::move(norm));
  return table;
}

}  // namespace citesim
