_base_ = './default.py'
DataParams = dict(
    data = "data/colon-cancer",
    n_features = 2000,
)
