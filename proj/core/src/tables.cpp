#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "rdlasso/sim.hpp"

namespace rdlasso {

void emit_tables(const std::vector<McSummary>& summaries, std::ostream& out) {
  if (summaries.empty()) {
    throw std::runtime_error("emit_tables: no summaries to write");
  }
  out << "dgp,p,n,reps,method,bias,rmse,cp,cp_se,length,h_mean,h_sd,b_mean,"
         "selected_avg,selected_min,selected_max,failures\n";
  out << std::fixed << std::setprecision(3);
  for (const McSummary& s : summaries) {
    for (const McMethodSummary& m : s.methods) {
      out << to_string(s.spec.dgp) << ',' << s.spec.p << ',' << s.spec.n << ','
          << s.reps << ',' << m.name << ',' << m.bias << ',' << m.rmse << ','
          << m.coverage << ',' << m.coverage_se << ',' << m.mean_length << ','
          << m.h_mean << ',' << m.h_sd << ',' << m.b_mean << ','
          << m.selected_mean << ',' << m.selected_min << ',' << m.selected_max
          << ',' << m.failures << '\n';
    }
  }
  if (!out) throw std::runtime_error("emit_tables: write failure");
}

void emit_tables(const std::vector<McSummary>& summaries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_tables: cannot open " + path);
  emit_tables(summaries, out);
}

}  // namespace rdlasso
