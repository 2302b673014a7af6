# HierSim backend
