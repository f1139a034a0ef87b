from django.db import models


class LossKind(models.TextChoices):
    L2_DB = 'l2_db', 'Squared error on dB gains'
    L1_DB = 'l1_db', 'Absolute error on dB gains'


class OptimizerKind(models.TextChoices):
    ADAM = 'adam', 'Adam (adaptive per-coefficient step)'
    SGD = 'sgd', 'Plain gradient descent'
