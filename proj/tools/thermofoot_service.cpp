// HTTP session service for the clinician front end.

#include "thermofoot/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace {
thermofoot::service::HttpService* g_service = nullptr;
}

int main(int argc, char** argv) {
  CLI::App app{"Thermography session service"};
  thermofoot::service::HttpOptions opt;
  std::string root = opt.root.string();
  app.add_option("--root", root, "Directory holding session folders");
  app.add_option("--host", opt.host, "Listen address");
  app.add_option("--port", opt.port, "Listen port (0 picks a free port)");
  app.add_option("--cors-origin", opt.cors_origin, "Value of Access-Control-Allow-Origin");
  CLI11_PARSE(app, argc, argv);
  opt.root = root;

  try {
    thermofoot::service::HttpService service(opt);
    const int port = service.bind();
    std::cout << "{\"listening\": " << port << "}" << std::endl;
    g_service = &service;
    std::signal(SIGINT, [](int) { g_service->stop(); });
    std::signal(SIGTERM, [](int) { g_service->stop(); });
    service.listen();
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"IoError\", \"message\": \"" << e.what() << "\"}" << std::endl;
    return 4;
  }
  return 0;
}
