_base_ = './default.py'
DataParams = dict(
    m = 400,
    n = 10000,
)
