_base_ = './default.py'
DataParams = dict(
    m = 200,
    n = 5000,
)
