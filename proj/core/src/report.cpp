#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "poisonlab/error.hpp"
#include "poisonlab/harness.hpp"

namespace poisonlab {

const char* const kReportHeader =
    "dataset,attack,defence,alpha,fraction,mean_test_error,std_test_error,"
    "mean_removed_poison_fraction,mean_removed_genuine_fraction,wall_time";

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw IngestionError("bad number '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw IngestionError("bad number '" + s + "'", line);
  }
}

}  // namespace

void write_report(std::ostream& out, const ExperimentReport& report) {
  std::vector<const ReportRow*> rows;
  for (const auto& r : report.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
    return std::tie(a->attack, a->defence, a->alpha, a->fraction) <
           std::tie(b->attack, b->defence, b->alpha, b->fraction);
  });
  out << kReportHeader << '\n';
  for (const ReportRow* r : rows) {
    out << r->dataset << ',' << r->attack << ',' << r->defence << ',' << fmt(r->alpha) << ','
        << fmt(r->fraction) << ',' << fmt(r->mean_test_error) << ',' << fmt(r->std_test_error)
        << ',' << fmt(r->mean_removed_poison_fraction) << ','
        << fmt(r->mean_removed_genuine_fraction) << ',' << fmt(r->wall_time) << '\n';
  }
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_report(out, report);
  if (!out) throw IoError("write failed: " + path.string());
}

ExperimentReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw IngestionError("unexpected report header", 1);

  ExperimentReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw IngestionError("expected 10 columns", line_no);
    ReportRow r;
    r.dataset = cells[0];
    r.attack = cells[1];
    r.defence = cells[2];
    r.alpha = parse_double(cells[3], line_no);
    r.fraction = parse_double(cells[4], line_no);
    r.mean_test_error = parse_double(cells[5], line_no);
    r.std_test_error = parse_double(cells[6], line_no);
    r.mean_removed_poison_fraction = parse_double(cells[7], line_no);
    r.mean_removed_genuine_fraction = parse_double(cells[8], line_no);
    r.wall_time = parse_double(cells[9], line_no);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace poisonlab
