// Small convergence table for the first catalog example; prints the CSV to stdout.
#include <iostream>

#include <imexl1.hpp>

int main() {
    using namespace imexl1;
    const double alpha = 0.5;
    const ProblemSpec p = catalog(ExampleId::Ex7_1, alpha);
    StudyOptions opt;  // RT1/P1dc, paper grading
    std::vector<RunReport> rs;
    for (int N : {4, 8, 16}) rs.push_back(study_run(p, alpha, N, opt).report);
    write_csv(std::cout, reports_with_rates(rs));
}
