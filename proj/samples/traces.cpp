// Prints the staged traces for two additions, using exact stage arithmetic or,
// when a checkpoint path is given, a trained model.
//
//   ccat_traces [checkpoint]

#include <iostream>

#include "ccat/ccat.hpp"

namespace {

template <ccat::StageSolver Solver>
void show(Solver& solver, const char* a, const char* b) {
  const ccat::VerifyReport v = ccat::verify_addition(solver, ccat::DigitString(a), ccat::DigitString(b));
  std::cout << "Autoregressive generation to compute: " << a << '+' << b << '\n'
            << ccat::render_trace(v.trace, false) << "Final answer: " << v.predicted
            << (v.match ? "" : "  (wrong, expected " + v.expected.str() + ")") << "\n\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    const ccat::Checkpoint ck = ccat::load_checkpoint(argv[1]);
    ccat::ModelStageSolver<float> solver(ck.params);
    show(solver, "65785", "8765");
    show(solver, "9582", "9261");
    return 0;
  }
  ccat::ExactStageSolver exact;
  show(exact, "65785", "8765");
  show(exact, "9582", "9261");
}
