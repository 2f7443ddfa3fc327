from django.apps import AppConfig


class PosgConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "posg"
    verbose_name = "Game models"
