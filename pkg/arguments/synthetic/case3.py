_base_ = './default.py'
DataParams = dict(
    m = 600,
    n = 15000,
)
NewtonParams = dict(
    dense_cap = 4000,
)
