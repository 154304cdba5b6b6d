#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mfc/bounds.hpp"
#include "mfc/dp.hpp"
#include "mfc/hjb.hpp"
#include "mfc/model.hpp"
#include "mfc/sim.hpp"

namespace mfc {

// Model document: JSON with fields states, actions {type, values|bounds,
// steps}, params, rates [{from, to, expr}], reward, terminal_reward
// (optional), rate_cap. Parse errors carry line and column.
ModelSpec parse_model_spec(const std::string& text);
ModelSpec load_model_spec(const std::string& path);

// Inverse of parse_model_spec up to formatting: parse(serialize(m)) has the
// same abstract content as m.
std::string serialize_model_spec(const ModelSpec& model);

// "builtin:<name>" or a file path, with --set style overrides. File-based
// models apply overrides to declared params only.
ModelSpec resolve_model(const std::string& ref,
                        const std::vector<std::pair<std::string, double>>& overrides = {});

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

// CSV artifacts. Every writer emits "# config: <json>" first and a
// "# generated: <stamp>" line; comparisons that want byte equality across
// reruns drop the generated line. Columns:
//   trajectory:  slot,t,action_0..,delta,m_<state>..   (delta = objects moved)
//   flow:        t,action_0..,m_<state>..
//   action fn:   t_start,t_end,action_0..
//   mc:          rep,value                (summary as trailing comments)
//   convergence: N,V_N_star,V_N_alpha_star,stderr_alpha,heuristic_value,
//                stderr_heur,best_nu,v_star,bound_B,bound_Bprime
void write_trajectory_csv(std::ostream& os, const ModelSpec& model, const Trajectory& traj,
                          const std::string& config_json);
void write_flow_csv(std::ostream& os, const ModelSpec& model, const SampledPath& path,
                    const ActionFunction& alpha, const std::string& config_json);
void write_action_function_csv(std::ostream& os, const ActionFunction& alpha,
                               const std::string& config_json);
void write_mc_csv(std::ostream& os, const MonteCarloValue& mc, const std::string& config_json);
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report,
                           const std::string& config_json);

// Piecewise-constant action function from rows t_start,t_end,action_0[,..];
// ignores comment lines and a header row. Pieces must tile [0, T] in order.
ActionFunction read_action_function_csv(const std::string& text);

// JSON artifacts (returned as text). The value field artifact carries the
// grid shape and the initial-time slice u(., 0) with its greedy actions; the
// dp artifact carries the slot-0 per-atom values and greedy actions.
std::string value_field_json(const ModelSpec& model, const SimplexGrid& grid,
                             const ValueField& field, const std::string& config_json);
std::string dp_solution_json(const ModelSpec& model, const OccupancyIndex& index,
                             const DPSolution& sol, const std::string& config_json);
std::string convergence_json(const ConvergenceReport& report, const std::string& config_json);

} // namespace mfc
