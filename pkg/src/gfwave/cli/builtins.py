"""Built-in example problems as spec text."""

DALEMBERT = """\
[problem]
kind = wave
dimension = 1
box = [[0, 1]]
T = 1

[coefficients]
R = [[1]]

[initial]
u0 = sin(2*pi*x)
u1 = 0

[solver]
h = 0.02
boundary = periodic
refine = 1, 2, 4

[run]
eps = 0.0625
exact = 0.5*(sin(2*pi*(x - t)) + sin(2*pi*(x + t)))
"""

DAMPED = """\
[problem]
kind = wave
dimension = 1
box = [[0, 1]]
T = 1

[coefficients]
R = [[1]]
a = -1

[initial]
u0 = 0
u1 = 1

[solver]
h = 0.005
boundary = periodic

[run]
eps = 0.0625
exact = 1 - exp(-t)
"""

ACOUSTIC = """\
[problem]
kind = acoustic
dimension = 1
box = [[-3, 3]]
coefficient_box = [[-2, 2]]
T = 1

[coefficients]
c = 1 + H(x)
rho = 1

[initial]
u0 = exp(-((x + 0.5)/0.15)^2)
u1 = 0

[mollifier]
mode = log

[sweep]
exponents = 4..14
R_ext = 2

[solver]
h = 0.02
boundary = extend

[run]
case = A
eps = 0.0625
"""

GT_1D = """\
[problem]
kind = wave
dimension = 1
box = [[-3, 3]]
coefficient_box = [[-2, 2]]
T = 1

[coefficients]
R = [[1 + H(x)]]
g = [0]

[initial]
u0 = exp(-((x + 0.5)/0.15)^2)
u1 = 0

[mollifier]
mode = log

[sweep]
exponents = 4..14
R_ext = 2

[solver]
h = 0.02
boundary = extend

[run]
case = A
eps = 0.0625
"""

BUILTINS = {"acoustic": ACOUSTIC, "dalembert": DALEMBERT, "damped": DAMPED, "gt-1d": GT_1D}
