public class Example {
    public static int main(String[] args) {
        int sum = 0;
        int product = 1;
        for (int i = 1; i <= 4; i++) {
            sum = sum + i;
            product = product * i;
        }
        if (sum > 100) sum = product;
        return sum;
    }
}
