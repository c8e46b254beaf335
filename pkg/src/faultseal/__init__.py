"""Coupled hydro-geomechanical simulation of two-phase flow in deformable
porous media, with mineralization-driven changes of hydraulic and mechanical
properties, Mohr-Coulomb fault reactivation and induced-seismicity estimates.

The package is organized as a plain numpy/scipy library:

- :mod:`faultseal.mesh` -- structured rectilinear grids with zone and fault tagging
- :mod:`faultseal.constitutive` -- fluid and retention (van Genuchten) models
- :mod:`faultseal.rockphysics` -- cementation stiffness and permeability laws
- :mod:`faultseal.flow` -- two-phase TPFA finite-volume solver
- :mod:`faultseal.mechanics` -- plane-strain and axisymmetric linear FEM
- :mod:`faultseal.failure` -- Mohr-Coulomb checks, stress drop, seismic events
- :mod:`faultseal.coupling` -- fixed-stress / monolithic coupling and workflow
- :mod:`faultseal.oracles` -- analytic reference solutions for verification
- :mod:`faultseal.scenarios` -- packaged column-test and field scenarios
- :mod:`faultseal.cli` -- command line entry points
"""

__version__ = "0.1.0"
