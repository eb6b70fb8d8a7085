#include "aquaplan/app.hpp"

int main(int argc, char** argv) { return aquaplan::app::run(argc, argv); }
