// Reference child-side implementation of the evaluator wire protocol, also
// used as a fault injector by the test suite.
//
// Reads one request object per line from stdin:
//   {"<parameter name>": value, ..., "workload": "<name>"}
// and answers with one response object on stdout:
//   {"cpi": <positive real>}   or   {"error": "<text>"}
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

int main(int argc, char** argv) {
  CLI::App app{"protocol stub evaluator"};
  double fixed_cpi = -1.0;
  bool formula = false;
  std::string error_text;
  bool missing_field = false;
  bool garbage = false;
  bool silent = false;
  int exit_code = 0;
  double sleep_seconds = 0.0;
  app.add_option("--cpi", fixed_cpi, "respond with this fixed cpi");
  app.add_flag("--formula", formula, "cpi = 0.5 + 5000/(1 + sum of parameter values)");
  app.add_option("--error", error_text, "respond with an error object");
  app.add_flag("--missing-field", missing_field, "respond without a cpi field");
  app.add_flag("--garbage", garbage, "respond with a non-parsable line");
  app.add_flag("--silent", silent, "exit without responding");
  app.add_option("--exit-code", exit_code, "exit status to return");
  app.add_option("--sleep", sleep_seconds, "delay before responding, seconds");
  CLI11_PARSE(app, argc, argv);

  if (silent) return exit_code;

  std::string line;
  if (!std::getline(std::cin, line)) return 1;

  if (sleep_seconds > 0)
    std::this_thread::sleep_for(std::chrono::duration<double>(sleep_seconds));

  if (garbage) {
    std::cout << "this is not a response\n";
    return exit_code;
  }
  if (missing_field) {
    std::cout << "{\"ipc\": 1.0}\n";
    return exit_code;
  }
  if (!error_text.empty()) {
    nlohmann::json resp;
    resp["error"] = error_text;
    std::cout << resp.dump() << "\n";
    return exit_code;
  }

  nlohmann::json req;
  try {
    req = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    nlohmann::json resp;
    resp["error"] = std::string("bad request: ") + e.what();
    std::cout << resp.dump() << "\n";
    return exit_code;
  }

  if (!formula && app.count("--cpi") == 0) {
    std::cout << "{\"error\": \"no cpi configured\"}\n";
    return exit_code;
  }
  double cpi = fixed_cpi;
  if (formula) {
    double sum = 0.0;
    for (const auto& [key, value] : req.items())
      if (value.is_number()) sum += value.get<double>();
    cpi = 0.5 + 5000.0 / (1.0 + sum);
  }
  nlohmann::json resp;
  resp["cpi"] = cpi;
  std::cout << resp.dump() << "\n";
  return exit_code;
}
