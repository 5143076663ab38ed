#pragma once
#include <string>

namespace dblab {

enum class Structure { DO_ONLY, THINK_DO, DO_THINK_DO };

std::string structure_name(Structure s);
Structure structure_from_name(const std::string& s);

// Bang-bang schedule in calendar order: do for tau1, think for tau2, do for tau3.
struct PolicySchedule {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;
    Structure structure = Structure::DO_ONLY;
    double q_at_switch = 0.0;
    double terminal_belief = 0.0;

    double horizon() const { return tau1 + tau2 + tau3; }
};

// Schedule with the structure tag derived from the period lengths.
PolicySchedule make_schedule(double tau1, double tau2, double tau3);

}  // namespace dblab
