import os


# ============================================
#              Numerical Defaults
# ============================================

# Densities below this are treated as exactly zero
zeroDensityFloor = 1e-14

# Absolute tolerance for the s0 quadrature
quadratureTol = 1e-10

# Integrator tolerances for classification-critical integrations
classifyRelTol = 1e-10
classifyAbsTol = 1e-12

# Integrator tolerances for sweeps
sweepRelTol = 1e-8
sweepAbsTol = 1e-10

# State norm above which a solution is declared to be blowing up
blowupThreshold = 1e8

# Step sizes below this fraction of |t_end - t0| count as collapsed
stepCollapseFactor = 1e-13

# Hard cap on accepted + rejected steps for a single integration
maxSteps = 500_000

# Relative tolerance for bracketed root refinement
rootRelTol = 1e-12

# An orbit whose invariant is this close to the minimum is degenerate
degenerateOrbitTol = 1e-12

# Period quadrature: relative tolerance and subinterval cap per half orbit
periodQuadratureTol = 1e-10
periodQuadratureLimit = 200

# Span doublings tried when the period falls back to q-zero events
periodEventAttempts = 4

# Relative margin around every deciding inequality
defaultMargin = 1e-6

# Envelope self-checks raise when violated by more than this
envelopeCheckTol = 1e-5

# |q0| and |s0| below this select the analytic equilibrium branch
equilibriumTol = 1e-10


# ============================================
#              Horizon Policy
# ============================================

# c > 0: number of periods integrated by the oracle, plus a fraction
oracleCycles = 2
oracleCycleMargin = 0.25

# c = 0: t_end = max(zeroBgMinHorizon, zeroBgDecayMultiple / decay scale)
zeroBgMinHorizon = 200.0
zeroBgDecayMultiple = 50.0
horizonExtensionFactor = 10.0
maxHorizon = 1e6

# Fraction of the horizon used when fitting decay exponents
decayFitStart = 0.25
decayRateTol = 0.10
decayRateTolN2 = 0.15

# eta counts as positive while above this fraction of its maximum
positivityFloor = 1e-9

# Samples used to read margins off a directly integrated eta
directSamples = 2001


# ============================================
#              Verification
# ============================================

# Relative margin band excluded from classifier/oracle comparisons
exclusionBand = 1e-3

# Default sampler ranges
samplerQ0 = (-3.0, 3.0)
samplerS0Offset = 0.01
samplerS0Max = 3.0
samplerRho0 = (1e-2, 1e2)
samplerP0 = (-5.0, 5.0)
samplerZeroDensityFraction = 0.15

# Agreement rate required for a sweep to pass, and for the threshold sweep
agreementTarget = 0.99
thresholdAgreementTarget = 1.0

# c = 0 branch coverage: compared points needed per classifier reason, and
# how many draws each branch gets per required point
branchMinCompared = 20
branchDrawFactor = 2

defaultSeed = 7
defaultSuiteCount = 20


# ============================================
#                 Parallelism
# ============================================
threadsEnvVar = "EP_CRITICAL_THREADS"


def max_workers() -> int:
    """
    Reads the worker cap from the environment. Anything unparsable or
    below one means serial execution.
    """
    try:
        return max(1, int(os.environ.get(threadsEnvVar, "1")))
    except ValueError:
        return 1


# ============================================
#                 Exit Codes
# ============================================
exitAllGlobal = 0
exitError = 1
exitAnyBreakdown = 2
exitAnyMarginal = 3
exitVerifyFailed = 4


# ============================================
#               Output Formats
# ============================================
outputFormats = ["csv", "json"]

profileColumns = ["r", "rho0", "u0"]
phaseColumns = ["t", "q", "s", "s_tilde", "gamma", "R_drift"]
trajectoryColumns = ["t", "rho", "p", "q", "s", "eta", "w", "A", "Gamma"]
regionColumns = ["u0r", "rho0", "a", "verdict", "margin"]
